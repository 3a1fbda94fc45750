#pragma once

// Shared fixtures for the unit and acceptance tests: random instances and
// random solver states in the domain the solver works on.

#include <cstdint>
#include <random>
#include <string>

#include "nrucoex/pdd_solver.hpp"
#include "nrucoex/rate_model.hpp"
#include "nrucoex/scenario.hpp"

namespace testsupport {

using namespace nrucoex;

inline std::string config_path(const std::string& name) { return std::string(NRUCOEX_CONFIG_DIR) + "/" + name; }

/// Desk geometry shrunk to the requested size.
inline Scenario small_scenario(int users, int antennas = 8, int rf_chains = 2) {
  Scenario s = desk_preset();
  s.num_users = users;
  s.nr_antennas = antennas;
  s.nr_rf_chains = rf_chains;
  return s;
}

/// Random queue state: backlogs of a few SPs of arrivals, WiGig queue below the cap.
inline QueueState random_queues(Rng& rng, const Scenario& s, double q_hi = 0.2) {
  QueueState qs(s.num_users);
  std::uniform_real_distribution<double> uq(0.0, q_hi), uz(0.0, s.inr_avg_mw());
  for (int k = 0; k < s.num_users; ++k) {
    qs.q(k) = uq(rng);
    qs.zc(k) = uq(rng);
  }
  qs.zw = uz(rng);
  return qs;
}

struct RandomCase {
  Scenario scenario;
  Environment env;
  QueueState queues;
  SpInstance instance;
};

inline RandomCase random_case(std::uint64_t seed, const Scenario& s, int t = 0) {
  RandomCase c;
  c.scenario = s;
  Rng chan = make_rng(seed, Stream::channels);
  Rng traffic = make_rng(seed, Stream::traffic);
  c.env = draw_environment(s, chan);
  c.queues = random_queues(traffic, s);
  c.instance = make_instance(s, c.env, c.queues, t);
  return c;
}

inline CMat random_cmat(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  CMat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = cplx(n(rng), n(rng));
  return m;
}

inline RMat random_rmat(Rng& rng, Eigen::Index r, Eigen::Index c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  RMat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return m;
}

/// Arbitrary primal state with the sign structure of the solver domain:
/// x, p, mu, xi, gamma nonnegative, F unit modulus, W off the F D manifold.
inline PrimalState random_primal(Rng& rng, const SpInstance& in) {
  const int u_count = in.num_beams();
  const int k_count = in.num_users;
  PrimalState s;
  s.x = random_rmat(rng, u_count, k_count, 0.0, 1.0);
  s.xt = random_rmat(rng, u_count, k_count, 0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  s.f.resize(in.num_aps);
  s.d.resize(in.num_aps);
  for (int i = 0; i < in.num_aps; ++i) {
    s.f[i].resize(in.antennas, in.rf_chains);
    for (Eigen::Index e = 0; e < s.f[i].size(); ++e) s.f[i](e) = std::polar(1.0, phase(rng));
    s.d[i] = random_cmat(rng, in.rf_chains, in.rf_chains, 0.5);
  }
  s.p = random_rmat(rng, k_count, 1, 0.0, in.p_max);
  s.w = s.fd() + random_cmat(rng, in.antennas, u_count, 0.3);
  const RMat g = beam_gains(in, s.w);
  const double gain_scale = std::max(1e-6, g.maxCoeff() * in.p_max);
  s.mu.resize(u_count);
  for (int u = 0; u < u_count; ++u) s.mu[u] = random_rmat(rng, u_count, k_count, 0.0, gain_scale);
  const RMat xw = wigig_gains(in, s.w);
  s.xi = random_rmat(rng, u_count, in.num_tx(), 0.0, std::max(1e-6, xw.size() ? 2.0 * xw.maxCoeff() : 0.0));
  s.gamma = random_rmat(rng, u_count, k_count, 0.0, 5.0);
  return s;
}

inline DualState random_dual(Rng& rng, const SpInstance& in, double scale = 1.0) {
  const int u_count = in.num_beams();
  const int k_count = in.num_users;
  std::uniform_real_distribution<double> urho(0.05, 1.0);
  DualState d = DualState::zeros(u_count, k_count, in.num_tx(), in.antennas, urho(rng), 1.0);
  d.lam_u = random_rmat(rng, k_count, 1, -scale, scale);
  d.lam_x = random_rmat(rng, u_count, k_count, -scale, scale);
  d.lam_xt = random_rmat(rng, u_count, k_count, -scale, scale);
  d.lam_w = random_cmat(rng, in.antennas, u_count, scale);
  for (auto& m : d.lam_mu) m = random_rmat(rng, u_count, k_count, -scale, scale);
  d.lam_xi = random_rmat(rng, u_count, in.num_tx(), -scale, scale);
  d.lam_gamma = random_rmat(rng, u_count, k_count, -scale, scale);
  return d;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace testsupport
