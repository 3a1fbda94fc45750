#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nrucoex/types.hpp"

namespace nrucoex {

/// Full static configuration of one coexistence scenario.
///
/// Powers and thresholds are stored in dBm as they appear in configuration
/// files; use the accessor helpers for the linear (mW) values used by the
/// numerics.
struct Scenario {
  // topology
  int num_nr_aps = 1;           // I
  int num_users = 6;            // K
  int num_wigig_aps = 1;        // J_A
  int wigig_users_per_ap = 4;   // WiGig users served by each WiGig AP
  double area_m = 10.0;

  // antennas
  int nr_antennas = 16;         // M0
  int nr_rf_chains = 2;         // N0
  int wigig_ap_antennas = 8;    // M^A
  int wigig_ap_rf_chains = 2;   // N^A
  int wigig_user_antennas = 2;  // M^U

  // powers and thresholds
  double nr_max_power_dbm = 10.0;
  double wigig_power_dbm = 10.0;
  double inr_max_dbm = -60.0;   // per-receiver cap
  double inr_avg_dbm = -54.0;   // long-term average cap
  double noise_psd_dbm_hz = -134.0;
  double bandwidth_mhz = 20.0;

  // Lyapunov weights
  double v0 = 50.0;
  double v1 = 1e13;

  // timing and traffic
  int num_sps = 20;
  double sp_duration_ms = 25.6;
  double arrival_density = 2.0;  // bit/s/Hz
  double packet_size = 0.005;    // bit/Hz per arriving packet
  double amax_quantile = 0.999;
  double delay_min_ms = 50.0;
  double delay_max_ms = 100.0;
  double r_min = 0.1;

  // channel
  int nlos_paths = 3;
  double pl0_db = 68.0;
  double pl_d0_m = 1.0;
  double pl_exp_los = 2.0;
  double pl_exp_nlos = 3.0;
  double nlos_extra_db = 10.0;
  double semi_orth_threshold = 0.5;

  // solver
  double rho0 = 0.5;
  double eta = 0.7;
  double delta0 = 1.0;
  double eps1 = 1e-3;
  double eps2 = 1e-3;
  int n_bcu_max = 10;
  int n_abf_max = 10;
  double abf_tol = 1e-6;
  int max_outer = 300;
  double grad_tol = 1e-6;
  int grad_max_steps = 200;
  double qp_tol = 1e-10;
  double gamma_cap = 1e6;
  bool warm_start = false;
  std::string solver_init = "cluster";  // first start: cluster-head hybrid design or random phases
  int solver_starts = 3;                 // starting points per SP, best decision kept

  std::uint64_t seed = 1;

  int num_beams() const { return nr_rf_chains * num_nr_aps; }
  int beam_ap(int u) const { return u / nr_rf_chains; }
  double tau_s() const { return sp_duration_ms * 1e-3; }
  double p_max_mw() const { return dbm_to_mw(nr_max_power_dbm); }
  double p_wigig_mw() const { return dbm_to_mw(wigig_power_dbm); }
  double inr_max_mw() const { return dbm_to_mw(inr_max_dbm); }
  double inr_avg_mw() const { return dbm_to_mw(inr_avg_dbm); }
  double noise_mw() const { return dbm_to_mw(noise_psd_dbm_hz) * bandwidth_mhz * 1e6; }
  double mean_arrival() const { return arrival_density * tau_s(); }

  bool operator==(const Scenario&) const = default;
};

namespace detail {

using FieldPtr = std::variant<int Scenario::*, double Scenario::*, bool Scenario::*,
                              std::uint64_t Scenario::*, std::string Scenario::*>;

struct Field {
  std::string_view key;
  FieldPtr ptr;
};

inline const std::vector<Field>& scenario_fields() {
  static const std::vector<Field> fields = {
      {"num_nr_aps", &Scenario::num_nr_aps},
      {"num_users", &Scenario::num_users},
      {"num_wigig_aps", &Scenario::num_wigig_aps},
      {"wigig_users_per_ap", &Scenario::wigig_users_per_ap},
      {"area_m", &Scenario::area_m},
      {"nr_antennas", &Scenario::nr_antennas},
      {"nr_rf_chains", &Scenario::nr_rf_chains},
      {"wigig_ap_antennas", &Scenario::wigig_ap_antennas},
      {"wigig_ap_rf_chains", &Scenario::wigig_ap_rf_chains},
      {"wigig_user_antennas", &Scenario::wigig_user_antennas},
      {"nr_max_power_dbm", &Scenario::nr_max_power_dbm},
      {"wigig_power_dbm", &Scenario::wigig_power_dbm},
      {"inr_max_dbm", &Scenario::inr_max_dbm},
      {"inr_avg_dbm", &Scenario::inr_avg_dbm},
      {"noise_psd_dbm_hz", &Scenario::noise_psd_dbm_hz},
      {"bandwidth_mhz", &Scenario::bandwidth_mhz},
      {"v0", &Scenario::v0},
      {"v1", &Scenario::v1},
      {"num_sps", &Scenario::num_sps},
      {"sp_duration_ms", &Scenario::sp_duration_ms},
      {"arrival_density", &Scenario::arrival_density},
      {"packet_size", &Scenario::packet_size},
      {"amax_quantile", &Scenario::amax_quantile},
      {"delay_min_ms", &Scenario::delay_min_ms},
      {"delay_max_ms", &Scenario::delay_max_ms},
      {"r_min", &Scenario::r_min},
      {"nlos_paths", &Scenario::nlos_paths},
      {"pl0_db", &Scenario::pl0_db},
      {"pl_d0_m", &Scenario::pl_d0_m},
      {"pl_exp_los", &Scenario::pl_exp_los},
      {"pl_exp_nlos", &Scenario::pl_exp_nlos},
      {"nlos_extra_db", &Scenario::nlos_extra_db},
      {"semi_orth_threshold", &Scenario::semi_orth_threshold},
      {"rho0", &Scenario::rho0},
      {"eta", &Scenario::eta},
      {"delta0", &Scenario::delta0},
      {"eps1", &Scenario::eps1},
      {"eps2", &Scenario::eps2},
      {"n_bcu_max", &Scenario::n_bcu_max},
      {"n_abf_max", &Scenario::n_abf_max},
      {"abf_tol", &Scenario::abf_tol},
      {"max_outer", &Scenario::max_outer},
      {"grad_tol", &Scenario::grad_tol},
      {"grad_max_steps", &Scenario::grad_max_steps},
      {"qp_tol", &Scenario::qp_tol},
      {"gamma_cap", &Scenario::gamma_cap},
      {"warm_start", &Scenario::warm_start},
      {"solver_init", &Scenario::solver_init},
      {"solver_starts", &Scenario::solver_starts},
      {"seed", &Scenario::seed},
  };
  return fields;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace detail

/// Names of the built-in presets.
inline std::vector<std::string> preset_names() { return {"desk", "paper"}; }

/// Desk-scale profile: small enough for a full policy comparison in minutes.
inline Scenario desk_preset() { return Scenario{}; }

/// Full-scale profile mirroring the published simulation setup.
inline Scenario paper_preset() {
  Scenario s;
  s.num_nr_aps = 2;
  s.num_users = 16;
  s.num_wigig_aps = 3;
  s.wigig_users_per_ap = 32;
  s.nr_antennas = 128;
  s.nr_rf_chains = 8;
  s.wigig_ap_antennas = 64;
  s.wigig_ap_rf_chains = 4;
  s.wigig_user_antennas = 4;
  s.nr_max_power_dbm = 10.0;
  s.wigig_power_dbm = 10.0;
  s.inr_max_dbm = -60.0;
  s.inr_avg_dbm = -54.0;
  s.v0 = 3e5;
  s.v1 = 1e13;
  s.num_sps = 20;
  s.sp_duration_ms = 25.6;
  s.arrival_density = 5.0;
  s.delay_min_ms = 1.0;
  s.delay_max_ms = 10.0;
  s.r_min = 0.1;
  s.nlos_paths = 3;
  s.rho0 = 0.5;
  s.delta0 = 1.0;
  s.n_bcu_max = 10;
  s.eps1 = 1e-3;
  s.eps2 = 1e-3;
  return s;
}

inline Scenario preset(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw ValidationError("preset", "unknown preset '" + name + "' (expected desk or paper)");
}

/// Checks every range invariant; throws ValidationError naming the key.
inline void validate(const Scenario& s) {
  auto require = [](bool ok, const char* key, const std::string& msg) {
    if (!ok) throw ValidationError(key, msg);
  };
  auto count = [&](int v, const char* key) {
    require(v >= 1, key, std::string(key) + " must be >= 1");
  };
  auto positive = [&](double v, const char* key) {
    require(std::isfinite(v) && v > 0.0, key, std::string(key) + " must be > 0");
  };
  auto finite = [&](double v, const char* key) {
    require(std::isfinite(v), key, std::string(key) + " must be finite");
  };

  count(s.num_nr_aps, "num_nr_aps");
  count(s.num_users, "num_users");
  count(s.num_wigig_aps, "num_wigig_aps");
  count(s.wigig_users_per_ap, "wigig_users_per_ap");
  count(s.nr_antennas, "nr_antennas");
  count(s.nr_rf_chains, "nr_rf_chains");
  count(s.wigig_ap_antennas, "wigig_ap_antennas");
  count(s.wigig_ap_rf_chains, "wigig_ap_rf_chains");
  count(s.wigig_user_antennas, "wigig_user_antennas");
  count(s.num_sps, "num_sps");
  count(s.n_bcu_max, "n_bcu_max");
  count(s.n_abf_max, "n_abf_max");
  count(s.max_outer, "max_outer");
  count(s.grad_max_steps, "grad_max_steps");
  count(s.solver_starts, "solver_starts");
  require(s.nr_rf_chains <= s.nr_antennas, "nr_rf_chains",
          "nr_rf_chains must not exceed nr_antennas");
  require(s.wigig_ap_rf_chains <= s.wigig_ap_antennas, "wigig_ap_rf_chains",
          "wigig_ap_rf_chains must not exceed wigig_ap_antennas");
  require(s.nlos_paths >= 0, "nlos_paths", "nlos_paths must be >= 0");

  positive(s.area_m, "area_m");
  finite(s.nr_max_power_dbm, "nr_max_power_dbm");
  finite(s.wigig_power_dbm, "wigig_power_dbm");
  finite(s.inr_max_dbm, "inr_max_dbm");
  finite(s.inr_avg_dbm, "inr_avg_dbm");
  finite(s.noise_psd_dbm_hz, "noise_psd_dbm_hz");
  positive(s.bandwidth_mhz, "bandwidth_mhz");
  require(std::isfinite(s.v0) && s.v0 >= 0.0, "v0", "v0 must be >= 0");
  require(std::isfinite(s.v1) && s.v1 >= 0.0, "v1", "v1 must be >= 0");
  positive(s.sp_duration_ms, "sp_duration_ms");
  require(std::isfinite(s.arrival_density) && s.arrival_density >= 0.0, "arrival_density",
          "arrival_density must be >= 0");
  positive(s.packet_size, "packet_size");
  require(s.amax_quantile > 0.0 && s.amax_quantile < 1.0, "amax_quantile",
          "amax_quantile must be in (0,1)");
  require(std::isfinite(s.delay_min_ms) && s.delay_min_ms >= 0.0, "delay_min_ms",
          "delay_min_ms must be >= 0");
  require(std::isfinite(s.delay_max_ms) && s.delay_max_ms >= s.delay_min_ms, "delay_max_ms",
          "delay_max_ms must be >= delay_min_ms");
  require(std::isfinite(s.r_min) && s.r_min >= 0.0, "r_min", "r_min must be >= 0");
  finite(s.pl0_db, "pl0_db");
  positive(s.pl_d0_m, "pl_d0_m");
  positive(s.pl_exp_los, "pl_exp_los");
  positive(s.pl_exp_nlos, "pl_exp_nlos");
  require(std::isfinite(s.nlos_extra_db) && s.nlos_extra_db >= 0.0, "nlos_extra_db",
          "nlos_extra_db must be >= 0");
  require(s.semi_orth_threshold > 0.0 && s.semi_orth_threshold <= 1.0, "semi_orth_threshold",
          "semi_orth_threshold must be in (0,1]");

  positive(s.rho0, "rho0");
  require(s.eta > 0.0 && s.eta < 1.0, "eta", "eta must be in (0,1)");
  positive(s.delta0, "delta0");
  positive(s.eps1, "eps1");
  positive(s.eps2, "eps2");
  positive(s.abf_tol, "abf_tol");
  positive(s.grad_tol, "grad_tol");
  positive(s.qp_tol, "qp_tol");
  positive(s.gamma_cap, "gamma_cap");
  require(s.solver_init == "cluster" || s.solver_init == "random", "solver_init",
          "solver_init must be 'cluster' or 'random'");
}

/// Parses `key = value` text on top of a base scenario. A `preset` key, if
/// present, replaces the base before the remaining keys are applied.
inline Scenario parse_scenario(std::istream& in, const Scenario& base) {
  std::vector<std::pair<int, std::pair<std::string, std::string>>> entries;
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string body = detail::trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value'");
    std::string key = detail::trim(std::string_view(body).substr(0, eq));
    std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "empty key");
    if (value.empty()) throw ParseError(lineno, "empty value for '" + key + "'");
    if (auto it = seen.find(key); it != seen.end())
      throw ParseError(lineno, "duplicate key '" + key + "' (first on line " +
                                   std::to_string(it->second) + ")");
    seen[key] = lineno;
    entries.push_back({lineno, {key, value}});
  }

  Scenario s = base;
  for (const auto& [ln, kv] : entries)
    if (kv.first == "preset") s = preset(kv.second);

  const auto& fields = detail::scenario_fields();
  for (const auto& [ln, kv] : entries) {
    const auto& [key, value] = kv;
    if (key == "preset") continue;
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const detail::Field& f) { return f.key == key; });
    if (it == fields.end()) throw ParseError(ln, "unknown key '" + key + "'");
    const char* first = value.data();
    const char* last = value.data() + value.size();
    std::visit(
        [&](auto ptr) {
          using T = std::remove_reference_t<decltype(s.*ptr)>;
          if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") s.*ptr = true;
            else if (value == "false" || value == "0") s.*ptr = false;
            else throw ParseError(ln, "expected true/false for '" + key + "'");
          } else if constexpr (std::is_same_v<T, std::string>) {
            s.*ptr = value;
          } else {
            T v{};
            auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc() || res.ptr != last)
              throw ParseError(ln, "invalid value '" + value + "' for '" + key + "'");
            s.*ptr = v;
          }
        },
        it->ptr);
  }
  validate(s);
  return s;
}

inline Scenario parse_scenario(const std::string& text, const Scenario& base) {
  std::istringstream in(text);
  return parse_scenario(in, base);
}

inline Scenario load_scenario(const std::string& path, const Scenario& base = desk_preset()) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return parse_scenario(in, base);
}

/// Writes every key in canonical order; values round-trip exactly.
inline void write_scenario(std::ostream& out, const Scenario& s) {
  for (const auto& f : detail::scenario_fields()) {
    out << f.key << " = ";
    std::visit(
        [&](auto ptr) {
          using T = std::remove_cvref_t<decltype(s.*ptr)>;
          if constexpr (std::is_same_v<T, bool>) out << (s.*ptr ? "true" : "false");
          else if constexpr (std::is_same_v<T, double>) out << detail::format_double(s.*ptr);
          else out << s.*ptr;
        },
        f.ptr);
    out << '\n';
  }
}

inline void save_scenario(const std::string& path, const Scenario& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file '" + path + "'");
  write_scenario(out, s);
}

}  // namespace nrucoex
