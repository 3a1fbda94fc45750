#include <gtest/gtest.h>

#include <filesystem>
#include <limits>

#include "nrucoex/results_io.hpp"
#include "support.hpp"

using namespace nrucoex;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nrucoex_io_" + name);
  fs::remove_all(p);
  return p;
}

Scenario tiny() {
  Scenario s = testsupport::small_scenario(3);
  s.num_sps = 5;
  return s;
}

}  // namespace

TEST(TraceCsv, OneRowPerSlotWithHeader) {
  const Scenario s = tiny();
  const auto mc = run_monte_carlo(s, {1, 2}, {Policy::chs_hbf_ep}, {}, 1);
  const fs::path dir = scratch("trace");
  write_trace(dir / "trace.csv", mc.episodes);
  const CsvTable t = read_csv(dir / "trace.csv");
  EXPECT_EQ(t.header, split_csv_line(kTraceHeader));
  ASSERT_EQ(t.rows.size(), 10u);
  for (const auto& row : t.rows) EXPECT_EQ(row.size(), t.header.size());
  EXPECT_EQ(t.rows[0][1], "chs_hbf_ep");
  EXPECT_EQ(t.rows[7][2], "2");
}

TEST(TraceCsv, InterferenceIsReportedInDbm) {
  EpisodeResult ep;
  ep.policy = Policy::chs_hbf_fp;
  SpRecord r;
  r.i_total = 1.0;
  r.after = QueueState(1);
  ep.records.push_back(r);
  const fs::path dir = scratch("dbm");
  write_trace(dir / "t.csv", {ep});
  EXPECT_EQ(read_csv(dir / "t.csv").rows.at(0).at(4), "0");
}

TEST(AggregateCsv, RecomputableFromTrace) {
  const Scenario s = tiny();
  const auto mc = run_monte_carlo(s, {3, 4, 5}, {Policy::chs_hbf_fp}, {}, 1);
  const fs::path dir = scratch("agg");
  write_trace(dir / "trace.csv", mc.episodes);
  write_aggregate(dir / "aggregate.csv", mc.rows);
  const CsvTable tr = read_csv(dir / "trace.csv");
  const CsvTable ag = read_csv(dir / "aggregate.csv");
  ASSERT_EQ(ag.rows.size(), 1u);
  double se = 0.0, iw = 0.0;
  for (const auto& row : tr.rows) {
    se += std::stod(row[3]);
    iw += dbm_to_mw(std::stod(row[4]));
  }
  se /= static_cast<double>(tr.rows.size());
  iw /= static_cast<double>(tr.rows.size());
  EXPECT_NEAR(std::stod(ag.rows[0][4]), se, 1e-9 * std::max(1.0, se));
  EXPECT_NEAR(std::stod(ag.rows[0][7]), mw_to_dbm(iw), 1e-6);
  EXPECT_EQ(ag.rows[0][1], "3");
}

TEST(OutputFiles, NonFiniteValueAbortsWithoutPartialFile) {
  AggregateRow row;
  row.mean_se = std::numeric_limits<double>::quiet_NaN();
  const fs::path dir = scratch("nan");
  try {
    write_aggregate(dir / "aggregate.csv", {row});
    FAIL() << "expected OutputError";
  } catch (const OutputError& e) {
    EXPECT_NE(std::string(e.what()).find("mean_se"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(dir / "aggregate.csv"));
}

TEST(ConvergenceCsv, OneFilePerSolverCall) {
  Scenario s = tiny();
  s.num_sps = 2;
  EpisodeOptions opt;
  opt.keep_convergence = true;
  const auto mc = run_monte_carlo(s, {1}, {Policy::pdd_cccp}, opt, 1);
  const fs::path dir = scratch("conv");
  write_convergence_dir(dir, mc.episodes);
  for (int t = 0; t < 2; ++t) {
    const CsvTable c = read_csv(dir / ("pdd_cccp_seed1_t" + std::to_string(t) + ".csv"));
    EXPECT_EQ(c.header, split_csv_line(kConvergenceHeader));
    EXPECT_FALSE(c.rows.empty());
  }
}
