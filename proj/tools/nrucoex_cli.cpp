// Command-line front end: run, compare and sweep Monte-Carlo experiments and
// write the trace / aggregate / convergence tables.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nrucoex/results_io.hpp"
#include "nrucoex/scenario.hpp"
#include "nrucoex/sim_harness.hpp"

namespace fs = std::filesystem;
using namespace nrucoex;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

struct Common {
  std::string config;
  std::string preset = "desk";
  int seeds = 1;
  std::string out = "results";
  int workers = 0;
  bool convergence = false;
  std::vector<std::string> overrides;  // key=value pairs applied last
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Scenario file (key = value lines)")->check(CLI::ExistingFile);
  cmd->add_option("--preset", c.preset, "Base preset: desk or paper")->capture_default_str();
  cmd->add_option("--seeds", c.seeds, "Number of Monte-Carlo seeds (scenario seed, seed+1, ...)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--workers", c.workers, "Worker threads (0 = hardware concurrency)");
  cmd->add_flag("--convergence", c.convergence, "Also write one convergence table per solver call");
  cmd->add_option("--set", c.overrides, "Override a scenario key, e.g. --set num_users=4");
}

Scenario resolve(const Common& c) {
  Scenario s = preset(c.preset);
  if (!c.config.empty()) s = load_scenario(c.config, s);
  if (!c.overrides.empty()) {
    std::string text;
    for (const auto& kv : c.overrides) {
      if (kv.find('=') == std::string::npos)
        throw ValidationError("set", "--set expects key=value, got '" + kv + "'");
      text += kv + '\n';
    }
    s = parse_scenario(text, s);
  }
  validate(s);
  return s;
}

int workers_of(const Common& c) { return c.workers > 0 ? c.workers : default_workers(); }

void write_outputs(const fs::path& out, const Scenario& s, const std::vector<EpisodeResult>& eps,
                   const std::vector<AggregateRow>& rows, bool convergence) {
  fs::create_directories(out);
  save_scenario((out / "scenario.cfg").string(), s);
  write_trace(out / "trace.csv", eps);
  write_aggregate(out / "aggregate.csv", rows);
  if (convergence) write_convergence_dir(out / "convergence", eps);
}

void print_rows(const std::vector<AggregateRow>& rows) {
  std::cout << kAggregateHeader << '\n';
  for (const auto& r : rows)
    std::cout << to_string(r.policy) << ',' << r.num_users << ',' << r.v0 << ',' << r.v1 << ',' << r.mean_se << ','
              << r.ci_se << ',' << r.mean_delay_ms << ',' << r.mean_iw_dbm << '\n';
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ValidationError("values", "invalid sweep value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("values", "sweep needs at least one value");
  return out;
}

int run_experiment(const Common& c, const std::vector<Policy>& policies) {
  const Scenario s = resolve(c);
  const auto seeds = seed_range(s.seed, c.seeds);
  const MonteCarloResult mc = run_monte_carlo(s, seeds, policies, {c.convergence}, workers_of(c));
  write_outputs(c.out, s, mc.episodes, mc.rows, c.convergence);
  print_rows(mc.rows);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NR-U / WiGig coexistence simulator"};
  app.require_subcommand(1);

  Common run_opts, cmp_opts, sweep_opts;
  std::string policy_name = "pdd_cccp";
  auto* run = app.add_subcommand("run", "One policy on one scenario");
  add_common(run, run_opts);
  run->add_option("--policy", policy_name, "pdd_cccp, chs_hbf_fp or chs_hbf_ep")
      ->check(CLI::IsMember({"pdd_cccp", "chs_hbf_fp", "chs_hbf_ep"}))
      ->capture_default_str();

  auto* compare = app.add_subcommand("compare", "Every policy on one scenario");
  add_common(compare, cmp_opts);

  std::string param, values, sweep_policies = "all";
  auto* sweep = app.add_subcommand("sweep", "Vary K or V1 over a list");
  add_common(sweep, sweep_opts);
  sweep->add_option("--param", param, "K or V1")->required()->check(CLI::IsMember({"K", "V1"}));
  sweep->add_option("--values", values, "Comma-separated values, e.g. 2,4,6,8")->required();
  sweep->add_option("--policy", sweep_policies, "Policy name or 'all'")
      ->check(CLI::IsMember({"all", "pdd_cccp", "chs_hbf_fp", "chs_hbf_ep"}))
      ->capture_default_str();

  std::string preset_name;
  auto* presets = app.add_subcommand("presets", "List built-in presets or print one");
  presets->add_option("name", preset_name, "Preset to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return run_experiment(run_opts, {parse_policy(policy_name)});
    if (*compare) return run_experiment(cmp_opts, all_policies());
    if (*sweep) {
      const Scenario s = resolve(sweep_opts);
      const SweepParam sp = parse_sweep_param(param);
      const std::vector<Policy> pols =
          sweep_policies == "all" ? all_policies() : std::vector<Policy>{parse_policy(sweep_policies)};
      const auto seeds = seed_range(s.seed, sweep_opts.seeds);
      const auto points =
          run_sweep(s, sp, parse_values(values), seeds, pols, {sweep_opts.convergence}, workers_of(sweep_opts));
      std::vector<EpisodeResult> eps;
      std::vector<AggregateRow> rows;
      for (const auto& mc : points) {
        eps.insert(eps.end(), mc.episodes.begin(), mc.episodes.end());
        rows.insert(rows.end(), mc.rows.begin(), mc.rows.end());
      }
      // Convergence files are keyed by policy/seed/SP, so per-point subdirectories keep them apart.
      write_outputs(sweep_opts.out, s, eps, rows, false);
      if (sweep_opts.convergence)
        for (std::size_t i = 0; i < points.size(); ++i)
          write_convergence_dir(fs::path(sweep_opts.out) / "convergence" / ("point" + std::to_string(i)),
                                points[i].episodes);
      print_rows(rows);
      return kOk;
    }
    if (*presets) {
      if (preset_name.empty()) {
        for (const auto& n : preset_names()) std::cout << n << '\n';
      } else {
        write_scenario(std::cout, preset(preset_name));
      }
      return kOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kValidation;
  } catch (const ValidationError& e) {
    std::cerr << "invalid " << e.key() << ": " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
