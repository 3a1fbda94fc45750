#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nrucoex/baselines.hpp"
#include "nrucoex/channel_model.hpp"
#include "nrucoex/pdd_solver.hpp"
#include "nrucoex/queue_state.hpp"
#include "nrucoex/rate_model.hpp"
#include "nrucoex/scenario.hpp"

namespace nrucoex {

enum class Policy { pdd_cccp, chs_hbf_fp, chs_hbf_ep };

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::pdd_cccp: return "pdd_cccp";
    case Policy::chs_hbf_fp: return "chs_hbf_fp";
    case Policy::chs_hbf_ep: return "chs_hbf_ep";
  }
  return "unknown";
}

inline Policy parse_policy(const std::string& name) {
  for (Policy p : {Policy::pdd_cccp, Policy::chs_hbf_fp, Policy::chs_hbf_ep})
    if (to_string(p) == name) return p;
  throw ValidationError("policy", "unknown policy '" + name + "' (expected pdd_cccp, chs_hbf_fp or chs_hbf_ep)");
}

inline std::vector<Policy> all_policies() { return {Policy::pdd_cccp, Policy::chs_hbf_fp, Policy::chs_hbf_ep}; }

/// Output-constraint audit of one decision.
struct DecisionCheck {
  bool interference_cap = true;
  bool power_box = true;
  bool one_beam = true;
  bool binary = true;
  bool unit_modulus = true;
  bool all() const { return interference_cap && power_box && one_beam && binary && unit_modulus; }
};

inline DecisionCheck check_decision(const SpInstance& in, const Decision& dec, double cap_tol_mw = 1e-6) {
  DecisionCheck c;
  const InterferenceResult ir = wigig_interference(in, dec.x, dec.p);
  c.interference_cap = ir.per_rx.size() == 0 || ir.max() <= in.i_max + cap_tol_mw;
  for (Eigen::Index k = 0; k < dec.x.cols(); ++k) {
    const double sx = dec.x.col(k).sum();
    if (dec.p(k) < 0.0 || dec.p(k) > in.p_max * sx * (1.0 + 1e-12)) c.power_box = false;
    if (std::abs(sx - 1.0) > 1e-12) c.one_beam = false;
    for (Eigen::Index u = 0; u < dec.x.rows(); ++u)
      if (dec.x(u, k) != 0.0 && dec.x(u, k) != 1.0) c.binary = false;
  }
  for (const CMat& f : dec.f)
    if ((f.cwiseAbs().array() - 1.0).abs().maxCoeff() > 1e-12) c.unit_modulus = false;
  return c;
}

/// Per-SP record of one episode.
struct SpRecord {
  int t = 0;
  double served_total = 0.0;  // bit/s/Hz actually delivered
  RVec served;
  RVec rate;                  // achievable rate per user
  RVec i_rx;                  // mW per receiving WiGig user
  double i_total = 0.0;
  QueueState before;
  QueueState after;
  int solver_outer_iters = 0;
  double solver_h = 0.0;
  bool solver_converged = true;
  int rmin_dropped = 0;
  int rmin_violations = 0;
  DecisionCheck check;
  DriftCheck drift;
  double objective = 0.0;     // drift-plus-penalty reward of the decision
};

struct EpisodeResult {
  Policy policy = Policy::pdd_cccp;
  std::uint64_t seed = 0;
  int num_users = 0;
  double v0 = 0.0;
  double v1 = 0.0;
  std::vector<SpRecord> records;
  std::vector<std::vector<ConvergenceRow>> convergence;  // per SP, solver policies only
  double mean_se = 0.0;
  double mean_delay_ms = 0.0;
  double mean_iw_mw = 0.0;
};

struct EpisodeOptions {
  bool keep_convergence = false;
};

/// Delay bounds in bit/Hz from per-user latency targets drawn on the traffic stream.
inline RVec draw_delay_bounds(Rng& rng, const Scenario& s) {
  std::uniform_real_distribution<double> delay(s.delay_min_ms, s.delay_max_ms);
  RVec q_bar(s.num_users);
  for (int k = 0; k < s.num_users; ++k) {
    const double ms = s.delay_max_ms > s.delay_min_ms ? delay(rng) : s.delay_min_ms;
    q_bar(k) = ms * 1e-3 * s.arrival_density;
  }
  return q_bar;
}

inline DriftParams drift_params(const Scenario& s, const RVec& q_bar, int num_rx) {
  DriftParams p;
  p.v0 = s.v0;
  p.v1 = s.v1;
  p.tau = s.tau_s();
  p.q_bar = q_bar;
  const ArrivalProcess arr{s.arrival_density, s.packet_size};
  p.a_max = RVec::Constant(s.num_users, arr.quantile_arrival(s.tau_s(), s.amax_quantile));
  p.i_bar = s.inr_avg_mw();
  p.num_rx = num_rx;
  p.i_max = s.inr_max_mw();
  return p;
}

/// One decision for the current SP under the chosen policy.
struct PolicyOutcome {
  Decision decision;
  std::optional<SolveResult> solve;
};

inline PolicyOutcome apply_policy(Policy policy, const Scenario& s, const SpInstance& in, Rng& solver_rng,
                                  const std::optional<PrimalState>& warm) {
  PolicyOutcome out;
  switch (policy) {
    case Policy::pdd_cccp: {
      out.solve = solve_sp(in, SolverSettings::from(s), solver_rng, warm);
      out.decision = out.solve->decision;
      break;
    }
    case Policy::chs_hbf_fp:
      out.decision = solve_baseline(in, BaselineKind::chs_hbf_fp, s.semi_orth_threshold);
      break;
    case Policy::chs_hbf_ep:
      out.decision = solve_baseline(in, BaselineKind::chs_hbf_ep, s.semi_orth_threshold);
      break;
  }
  return out;
}

/// Observe, decide, transmit and update queues for every SP of one episode.
inline EpisodeResult run_episode(const Scenario& s, std::uint64_t seed, Policy policy,
                                 const EpisodeOptions& opt = {}) {
  validate(s);
  Rng chan_rng = make_rng(seed, Stream::channels);
  Rng traffic_rng = make_rng(seed, Stream::traffic);
  Rng solver_rng = make_rng(seed, Stream::solver);

  const Environment env = draw_environment(s, chan_rng);
  const RVec q_bar = draw_delay_bounds(traffic_rng, s);
  const ArrivalProcess arrivals{s.arrival_density, s.packet_size};
  const double tau = s.tau_s();

  EpisodeResult ep;
  ep.policy = policy;
  ep.seed = seed;
  ep.num_users = s.num_users;
  ep.v0 = s.v0;
  ep.v1 = s.v1;
  QueueState qs(s.num_users);
  std::optional<PrimalState> warm;
  double q_acc = 0.0;

  for (int t = 0; t < s.num_sps; ++t) {
    const RVec a = arrivals.draw(traffic_rng, s.num_users, tau);
    const SpInstance in = make_instance(s, env, qs, t);
    PolicyOutcome po = apply_policy(policy, s, in, solver_rng, s.warm_start ? warm : std::nullopt);

    SpRecord rec;
    rec.t = t;
    const RateResult rr = sinr_and_rate(in, po.decision);
    rec.rate = rr.user_rate;
    rec.served = served_rate(in, rr.user_rate);
    rec.served_total = rec.served.sum();
    const InterferenceResult ir = wigig_interference(in, po.decision.x, po.decision.p);
    rec.i_rx = ir.per_rx;
    rec.i_total = ir.total;
    rec.check = check_decision(in, po.decision);
    rec.objective = sp_objective(in, po.decision);
    if (po.solve) {
      const SolverReport& rep = po.solve->report;
      rec.solver_outer_iters = rep.outer_iters;
      rec.solver_h = rep.final_h;
      rec.solver_converged = rep.converged;
      rec.rmin_dropped = static_cast<int>(rep.rmin_dropped.size());
      rec.rmin_violations = static_cast<int>(rep.rmin_violations.size());
      if (opt.keep_convergence) ep.convergence.push_back(rep.trace);
      warm = po.solve->state;
      warm->x = po.decision.x;
      warm->xt = po.decision.x;
      warm->p = po.decision.p;
    }
    rec.before = qs;
    qs = step_queues(qs, rec.served, tau, a, ir.total, s.inr_avg_mw(), q_bar);
    rec.after = qs;
    rec.drift = drift_bound_check(rec.before, rec.after, rec.served, ir.total,
                                  drift_params(s, q_bar, in.num_rx()));
    ep.mean_se += rec.served_total;
    ep.mean_iw_mw += rec.i_total;
    q_acc += qs.q.mean();
    ep.records.push_back(std::move(rec));
  }
  const double n = static_cast<double>(s.num_sps);
  ep.mean_se /= n;
  ep.mean_iw_mw /= n;
  ep.mean_delay_ms = s.arrival_density > 0.0 ? 1e3 * (q_acc / n) / s.arrival_density : 0.0;
  return ep;
}

/// Mean and 95% normal-approximation half-width over independent samples.
struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

inline MeanCi mean_ci(const std::vector<double>& v) {
  MeanCi r;
  if (v.empty()) return r;
  double sum = 0.0;
  for (double x : v) sum += x;
  r.mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) return r;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  r.half_width = 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
  return r;
}

struct AggregateRow {
  Policy policy = Policy::pdd_cccp;
  int num_users = 0;
  double v0 = 0.0;
  double v1 = 0.0;
  double mean_se = 0.0;
  double ci_se = 0.0;
  double mean_delay_ms = 0.0;
  double mean_iw_dbm = 0.0;
  int episodes = 0;
};

inline AggregateRow aggregate(const std::vector<EpisodeResult>& eps) {
  AggregateRow row;
  if (eps.empty()) return row;
  row.policy = eps.front().policy;
  row.num_users = eps.front().num_users;
  row.v0 = eps.front().v0;
  row.v1 = eps.front().v1;
  std::vector<double> se;
  double delay = 0.0, iw = 0.0;
  for (const auto& e : eps) {
    se.push_back(e.mean_se);
    delay += e.mean_delay_ms;
    iw += e.mean_iw_mw;
  }
  const MeanCi ci = mean_ci(se);
  row.mean_se = ci.mean;
  row.ci_se = ci.half_width;
  row.mean_delay_ms = delay / static_cast<double>(eps.size());
  row.mean_iw_dbm = mw_to_dbm(iw / static_cast<double>(eps.size()));
  row.episodes = static_cast<int>(eps.size());
  return row;
}

/// Runs independent jobs on up to `workers` threads; results keep job order.
template <class Job>
inline std::vector<EpisodeResult> run_jobs(const std::vector<Job>& jobs, int workers,
                                           const std::function<EpisodeResult(const Job&)>& fn) {
  std::vector<EpisodeResult> out(jobs.size());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = fn(jobs[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < jobs.size(); i = next++) out[i] = fn(jobs[i]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

struct MonteCarloResult {
  std::vector<EpisodeResult> episodes;  // policy-major, then seed order
  std::vector<AggregateRow> rows;       // one per policy
};

inline MonteCarloResult run_monte_carlo(const Scenario& s, const std::vector<std::uint64_t>& seeds,
                                        const std::vector<Policy>& policies, const EpisodeOptions& opt = {},
                                        int workers = default_workers()) {
  if (seeds.empty()) throw std::invalid_argument("run_monte_carlo: at least one seed is required");
  struct Job {
    Policy policy;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Policy p : policies)
    for (auto seed : seeds) jobs.push_back({p, seed});
  MonteCarloResult mc;
  mc.episodes = run_jobs<Job>(jobs, workers, [&](const Job& j) { return run_episode(s, j.seed, j.policy, opt); });
  for (std::size_t p = 0; p < policies.size(); ++p) {
    std::vector<EpisodeResult> slice(mc.episodes.begin() + p * seeds.size(),
                                     mc.episodes.begin() + (p + 1) * seeds.size());
    mc.rows.push_back(aggregate(slice));
  }
  return mc;
}

enum class SweepParam { num_users, v1 };

inline SweepParam parse_sweep_param(const std::string& name) {
  if (name == "K" || name == "k" || name == "num_users") return SweepParam::num_users;
  if (name == "V1" || name == "v1") return SweepParam::v1;
  throw ValidationError("param", "unknown sweep parameter '" + name + "' (expected K or V1)");
}

/// Monte-Carlo comparison at every point of a K or V1 sweep.
inline std::vector<MonteCarloResult> run_sweep(const Scenario& base, SweepParam param,
                                               const std::vector<double>& values,
                                               const std::vector<std::uint64_t>& seeds,
                                               const std::vector<Policy>& policies, const EpisodeOptions& opt = {},
                                               int workers = default_workers()) {
  std::vector<MonteCarloResult> out;
  for (double v : values) {
    Scenario s = base;
    if (param == SweepParam::num_users) {
      if (v < 1.0 || v != std::floor(v)) throw ValidationError("num_users", "K sweep values must be positive integers");
      s.num_users = static_cast<int>(v);
    } else {
      s.v1 = v;
    }
    validate(s);
    out.push_back(run_monte_carlo(s, seeds, policies, opt, workers));
  }
  return out;
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

}  // namespace nrucoex
