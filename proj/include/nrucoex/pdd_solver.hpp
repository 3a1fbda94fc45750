#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "nrucoex/baselines.hpp"
#include "nrucoex/channel_model.hpp"
#include "nrucoex/pdd_blocks.hpp"
#include "nrucoex/pdd_state.hpp"
#include "nrucoex/rate_model.hpp"

namespace nrucoex {

struct ConvergenceRow {
  int outer_iter = 0;
  int inner_iter = 0;
  double al_value = 0.0;
  double h = 0.0;
};

struct BlockTimings {
  double grouping_s = 0.0;
  double power_s = 0.0;
  double analog_s = 0.0;
  double digital_s = 0.0;
  double aux_s = 0.0;
};

struct SolverReport {
  std::vector<ConvergenceRow> trace;  // one row per inner iteration
  std::vector<double> h_trace;        // one entry per outer iteration
  std::vector<double> rho_trace;
  int outer_iters = 0;
  int inner_iters = 0;
  bool converged = false;  // violation fell below eps2
  double final_h = 0.0;    // violation of the returned iterate before rounding
  std::vector<int> rmin_dropped;     // minimum-rate requirement relaxed as infeasible
  std::vector<int> rmin_violations;  // enforced requirement missed at the output
  BlockTimings timings;
  int start = 0;   // starting point that produced the decision
  int starts = 1;  // starting points tried
};

struct SolveResult {
  Decision decision;
  PrimalState state;  // relaxed iterate the decision was rounded from
  DualState dual;
  SolverReport report;
  double objective = 0.0;  // per-SP objective of the decision
};

/// Upper bound on the SINR user k can reach anywhere: full power within the
/// interference caps, a combiner matched to its channel and no interference.
inline double sinr_upper_bound(const SpInstance& in, int k) {
  double p = in.p_max;
  for (int j = 0; j < in.num_rx(); ++j)
    if (in.coupling(j, k) > 0.0) p = std::min(p, in.i_max / in.coupling(j, k));
  double best = 0.0;
  for (int i = 0; i < in.num_aps; ++i) best = std::max(best, in.h[i].col(k).squaredNorm() * in.antennas);
  return p * best;
}

/// Relaxes the minimum-rate requirement of users that cannot meet it in this SP,
/// largest shortfall first. Returns the relaxed users.
inline std::vector<int> relax_infeasible_rmin(SpInstance& in) {
  std::vector<std::pair<double, int>> shortfall;
  for (int k = 0; k < in.num_users; ++k) {
    if (!in.rmin_active[k]) continue;
    const double cap = std::min(sinr_upper_bound(in, k), in.gamma_max(k));
    if (cap < in.gamma_min) shortfall.push_back({in.gamma_min - cap, k});
  }
  std::stable_sort(shortfall.begin(), shortfall.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<int> dropped;
  for (const auto& [gap, k] : shortfall) {
    in.rmin_active[k] = 0;
    if (in.backlog(k) > 0.0) dropped.push_back(k);
  }
  return dropped;
}

/// Enforced-requirement user furthest below its minimum SINR at the current
/// iterate, or -1 if every enforced requirement is met.
inline int largest_rmin_shortfall(const SpInstance& in, const PrimalState& s) {
  const EffectiveGains e = effective_gains(in, s.x, s.p, s.w);
  int worst = -1;
  double worst_gap = 0.0;
  for (int k = 0; k < in.num_users; ++k) {
    if (!in.rmin_active[k]) continue;
    const double target = std::min(in.gamma_min, in.gamma_max(k));
    double reached = 0.0;
    for (int u = 0; u < in.num_beams(); ++u) reached += e.gamma(u, k);
    const double gap = (target - reached) / std::max(target, 1e-300);
    if (gap > worst_gap) worst_gap = gap, worst = k;
  }
  return worst;
}

/// True when the best violation of the last `window` outer iterations is
/// less than 10% below the best one before them.
inline bool violation_stalled(const std::vector<double>& h, std::size_t since, std::size_t window = 20) {
  if (h.size() < since + 2 * window) return false;
  const auto mid = h.end() - static_cast<std::ptrdiff_t>(window);
  const double before = *std::min_element(h.begin() + static_cast<std::ptrdiff_t>(since), mid);
  const double recent = *std::min_element(mid, h.end());
  return recent > 0.9 * before;
}

/// Scales powers down uniformly so every receiver meets its interference cap.
inline RVec enforce_interference_cap(const SpInstance& in, const RMat& x, RVec p) {
  const InterferenceResult ir = wigig_interference(in, x, p);
  if (ir.per_rx.size() && ir.max() > in.i_max) p *= in.i_max / ir.max();
  return p;
}

/// Completes a state from its grouping, combiners and powers: W = F D and
/// auxiliaries consistent with them.
inline PrimalState complete_state(const SpInstance& in, PrimalState s) {
  s.w = s.fd();
  s.xt = s.x;
  s.p = enforce_interference_cap(in, s.x, s.p);
  const EffectiveGains e = effective_gains(in, s.x, s.p, s.w);
  s.mu = e.mu;
  s.xi = e.xi;
  s.gamma.resize(in.num_beams(), in.num_users);
  for (int u = 0; u < in.num_beams(); ++u)
    for (int k = 0; k < in.num_users; ++k) {
      const auto [lo, hi] = sinr_bounds(in, s.x(u, k), k);
      s.gamma(u, k) = std::clamp(e.gamma(u, k), lo, hi);
    }
  return s;
}

/// Feasible starting point: random analog phases, identity digital stage,
/// strongest-beam grouping, half power scaled into the caps.
inline PrimalState initial_state(const SpInstance& in, Rng& rng) {
  const int k_count = in.num_users;
  const int n0 = in.rf_chains;
  const int m0 = in.antennas;
  PrimalState s;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  s.f.resize(in.num_aps);
  s.d.resize(in.num_aps);
  for (int i = 0; i < in.num_aps; ++i) {
    s.f[i].resize(m0, n0);
    for (int n = 0; n < n0; ++n)
      for (int m = 0; m < m0; ++m) s.f[i](m, n) = std::polar(1.0, phase(rng));
    s.d[i] = CMat::Identity(n0, n0);
    for (int n = 0; n < n0; ++n) s.d[i].col(n) = normalize_combiner(s.f[i], s.d[i].col(n));
  }
  const RMat g = beam_gains(in, s.fd());
  s.x = RMat::Zero(in.num_beams(), k_count);
  for (int k = 0; k < k_count; ++k) {
    Eigen::Index best = 0;
    g.col(k).maxCoeff(&best);
    s.x(best, k) = 1.0;
  }
  s.p = RVec::Constant(k_count, in.p_max / 2.0);
  return complete_state(in, s);
}

/// Starting point from the cluster-head grouping and zero-forcing hybrid
/// design with beam-shared full power. Unused beams keep a unit digital column.
inline PrimalState cluster_initial_state(const SpInstance& in, double threshold) {
  const Decision b = solve_baseline(in, BaselineKind::chs_hbf_fp, threshold);
  PrimalState s;
  s.x = b.x;
  s.f = b.f;
  s.d = b.d;
  for (int i = 0; i < in.num_aps; ++i)
    for (int n = 0; n < in.rf_chains; ++n)
      if (s.d[i].col(n).norm() == 0.0) s.d[i].col(n) = normalize_combiner(s.f[i], CVec::Unit(in.rf_chains, n));
  s.p = b.p;
  return complete_state(in, s);
}

/// Outer-loop update: multipliers if the violation is small enough, otherwise
/// a tighter penalty. Returns the violation it acted on.
inline double outer_update(const SpInstance& in, const PrimalState& s, DualState& d, double eta) {
  const Residuals r = residuals(in, s);
  const double h = r.violation();
  if (h <= d.delta) {
    const double step = 1.0 / d.rho;
    d.lam_u += step * r.sum_x;
    d.lam_x += step * r.x_copy;
    d.lam_xt += step * r.binary;
    d.lam_w += step * r.coupling;
    for (std::size_t u = 0; u < r.mu.size(); ++u) d.lam_mu[u] += step * r.mu[u];
    d.lam_xi += step * r.xi;
    d.lam_gamma += step * r.sinr;
  } else {
    d.rho *= eta;
  }
  d.delta = 0.9 * h;
  return h;
}

/// Rounds the relaxed grouping (argmax per user, lowest beam on ties).
inline RMat round_grouping(const RMat& x) {
  RMat out = RMat::Zero(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    Eigen::Index best = 0;
    for (Eigen::Index u = 1; u < x.rows(); ++u)
      if (x(u, k) > x(best, k)) best = u;
    out(best, k) = 1.0;
  }
  return out;
}

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Dual-loop penalty/CCCP iterations from one starting point. `in` already
/// carries the up-front minimum-rate relaxation.
inline SolveResult solve_from(SpInstance in, const SolverSettings& cfg, PrimalState s) {
  SolveResult out;
  SolverReport& rep = out.report;
  DualState d = DualState::zeros(in.num_beams(), in.num_users, in.num_tx(), in.antennas, cfg.rho0, cfg.delta0);
  const EmbeddedChannels emb(in);

  PrimalState best = s;
  double best_h = std::numeric_limits<double>::infinity();
  std::size_t restart_at = 0;
  detail::Stopwatch clock;

  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    double prev_al = al_value(in, s, d);
    const std::size_t first_row = rep.trace.size();
    for (int inner = 0; inner < cfg.n_bcu_max; ++inner) {
      CMat anchor = s.w;
      CccpTerms z = cccp_linearize(in, s, d, anchor);
      clock.lap();
      solve_grouping_sinr(in, s, d, z, cfg.qp_tol);
      rep.timings.grouping_s += clock.lap();
      solve_power(in, s, d, z, cfg.qp_tol);
      rep.timings.power_s += clock.lap();
      solve_analog_bf(in, s, d, cfg.n_abf_max, cfg.abf_tol);
      rep.timings.analog_s += clock.lap();
      solve_digital_bf(in, s, d, emb, anchor, cfg.grad_tol, cfg.grad_max_steps);
      rep.timings.digital_s += clock.lap();
      solve_aux(in, s, d);
      rep.timings.aux_s += clock.lap();
      ++rep.inner_iters;

      const double al = al_value(in, s, d);
      rep.trace.push_back({outer, inner, al, 0.0});
      const bool settled = std::abs(al - prev_al) <= cfg.eps1;
      prev_al = al;
      if (settled) break;
    }
    const double h = outer_update(in, s, d, cfg.eta);
    for (std::size_t r = first_row; r < rep.trace.size(); ++r) rep.trace[r].h = h;
    rep.h_trace.push_back(h);
    rep.rho_trace.push_back(d.rho);
    rep.outer_iters = outer + 1;
    if (h < best_h) {
      best_h = h;
      best = s;
    }
    if (h < cfg.eps2) {
      rep.converged = true;
      break;
    }
    // A stalled violation means the remaining requirements are jointly
    // infeasible here: relax the worst one and restart the multipliers.
    if (violation_stalled(rep.h_trace, restart_at)) {
      const int k = largest_rmin_shortfall(in, s);
      if (k >= 0) {
        in.rmin_active[k] = 0;
        if (in.backlog(k) > 0.0) rep.rmin_dropped.push_back(k);
        d = DualState::zeros(in.num_beams(), in.num_users, in.num_tx(), in.antennas, cfg.rho0, cfg.delta0);
        restart_at = rep.h_trace.size();
        best_h = std::numeric_limits<double>::infinity();
      }
    }
  }

  const PrimalState& chosen = rep.converged ? s : best;
  rep.final_h = rep.converged ? rep.h_trace.back() : best_h;

  // Round, then re-solve power with W = F D under the binary grouping.
  PrimalState fin = chosen;
  fin.x = round_grouping(chosen.x);
  fin.w = fin.fd();
  const CccpTerms z = cccp_linearize(in, fin, d, fin.w);
  fin.p = solve_power_problem(in, power_problem(in, fin, d, z), d.rho, fin.p, cfg.qp_tol);

  out.decision = fin.decision();
  out.state = chosen;
  out.dual = d;

  const RateResult rr = sinr_and_rate(in, out.decision);
  for (int k = 0; k < in.num_users; ++k)
    if (in.rmin_active[k] && in.backlog(k) > 0.0 &&
        rr.user_rate(k) + 1e-9 < std::log2(1.0 + std::min(in.gamma_min, in.gamma_max(k))))
      rep.rmin_violations.push_back(k);
  out.objective = sp_objective(in, out.decision);
  return out;
}

/// Solves one SP from several starting points and keeps the decision that
/// misses the fewest minimum-rate requirements, then has the best objective.
/// The first start is the warm start if given, else the cluster design (or
/// random phases); later starts use random phases.
inline SolveResult solve_sp(SpInstance in, const SolverSettings& cfg, Rng& rng,
                            const std::optional<PrimalState>& warm = std::nullopt) {
  const std::vector<int> dropped = relax_infeasible_rmin(in);
  std::optional<SolveResult> best;
  auto misses = [](const SolverReport& r) { return r.rmin_dropped.size() + r.rmin_violations.size(); };
  const int starts = std::max(1, cfg.starts);
  for (int st = 0; st < starts; ++st) {
    // A warm start re-derives its auxiliaries for this SP's channels and queues.
    PrimalState init = st == 0 && warm          ? complete_state(in, *warm)
                       : st == 0 && cfg.cluster_init ? cluster_initial_state(in, cfg.cluster_threshold)
                                                     : initial_state(in, rng);
    SolveResult r = solve_from(in, cfg, std::move(init));
    r.report.start = st;
    if (!best || misses(r.report) < misses(best->report) ||
        (misses(r.report) == misses(best->report) && r.objective > best->objective))
      best = std::move(r);
  }
  best->report.starts = starts;
  best->report.rmin_dropped.insert(best->report.rmin_dropped.begin(), dropped.begin(), dropped.end());
  return *best;
}

}  // namespace nrucoex
