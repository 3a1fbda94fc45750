#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrucoex/pdd_solver.hpp"
#include "nrucoex/sim_harness.hpp"

namespace nrucoex {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt(double v, const std::string& what) {
  if (!std::isfinite(v)) throw OutputError("non-finite value in column '" + what + "'");
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

/// Builds the whole file in memory so a bad value never leaves a partial file.
inline void write_text(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw OutputError("cannot open '" + path.string() + "' for writing");
  f << body;
  if (!f) throw OutputError("write failed for '" + path.string() + "'");
}

template <class Fn>
inline void write_csv(const std::filesystem::path& path, const std::string& header, Fn rows) {
  std::ostringstream os;
  os << header << '\n';
  try {
    rows(os);
  } catch (const OutputError& e) {
    throw OutputError(path.string() + ": " + e.what());
  }
  write_text(path, os.str());
}

}  // namespace detail

inline const char* kTraceHeader = "t,policy,seed,R_total,I_w_dBm,max_Q,max_Zc,Zw,solver_outer_iters,solver_h";
inline const char* kAggregateHeader = "policy,K,V0,V1,mean_se,ci_se,mean_delay_ms,mean_Iw_dBm";
inline const char* kConvergenceHeader = "outer_iter,inner_iter,al_value,h";

inline void append_trace_rows(std::ostream& os, const EpisodeResult& ep) {
  using detail::fmt;
  for (const SpRecord& r : ep.records) {
    os << r.t << ',' << to_string(ep.policy) << ',' << ep.seed << ',' << fmt(r.served_total, "R_total") << ','
       << fmt(mw_to_dbm(r.i_total), "I_w_dBm") << ',' << fmt(r.after.q.maxCoeff(), "max_Q") << ','
       << fmt(r.after.zc.maxCoeff(), "max_Zc") << ',' << fmt(r.after.zw, "Zw") << ',' << r.solver_outer_iters << ','
       << fmt(r.solver_h, "solver_h") << '\n';
  }
}

inline void write_trace(const std::filesystem::path& path, const std::vector<EpisodeResult>& eps) {
  detail::write_csv(path, kTraceHeader, [&](std::ostream& os) {
    for (const auto& ep : eps) append_trace_rows(os, ep);
  });
}

inline void write_aggregate(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
  using detail::fmt;
  detail::write_csv(path, kAggregateHeader, [&](std::ostream& os) {
    for (const auto& r : rows)
      os << to_string(r.policy) << ',' << r.num_users << ',' << fmt(r.v0, "V0") << ',' << fmt(r.v1, "V1") << ','
         << fmt(r.mean_se, "mean_se") << ',' << fmt(r.ci_se, "ci_se") << ',' << fmt(r.mean_delay_ms, "mean_delay_ms")
         << ',' << fmt(r.mean_iw_dbm, "mean_Iw_dBm") << '\n';
  });
}

inline void write_convergence(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows) {
  using detail::fmt;
  detail::write_csv(path, kConvergenceHeader, [&](std::ostream& os) {
    for (const auto& r : rows)
      os << r.outer_iter << ',' << r.inner_iter << ',' << fmt(r.al_value, "al_value") << ',' << fmt(r.h, "h") << '\n';
  });
}

/// One file per solver call: <dir>/<policy>_seed<seed>_t<t>.csv
inline void write_convergence_dir(const std::filesystem::path& dir, const std::vector<EpisodeResult>& eps) {
  for (const auto& ep : eps)
    for (std::size_t t = 0; t < ep.convergence.size(); ++t)
      write_convergence(dir / (to_string(ep.policy) + "_seed" + std::to_string(ep.seed) + "_t" + std::to_string(t) +
                               ".csv"),
                        ep.convergence[t]);
}

/// Minimal CSV reader for round-trip checks: header plus rows of fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw OutputError("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (std::getline(f, line)) t.header = split_csv_line(line);
  while (std::getline(f, line))
    if (!line.empty()) t.rows.push_back(split_csv_line(line));
  return t;
}

}  // namespace nrucoex
