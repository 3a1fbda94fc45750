#pragma once

#include <cmath>
#include <vector>

#include "nrucoex/channel_model.hpp"
#include "nrucoex/queue_state.hpp"
#include "nrucoex/scenario.hpp"
#include "nrucoex/types.hpp"

namespace nrucoex {

/// Everything a policy needs to decide one service period. Channels are
/// divided by the noise amplitude so the receiver noise power is 1 and
/// gains times mW powers read directly as SNR.
struct SpInstance {
  int num_users = 0;
  int num_aps = 0;
  int rf_chains = 0;
  int antennas = 0;

  std::vector<CMat> h;               // [nr_ap]: M0 x K
  std::vector<std::vector<CMat>> y;  // [nr_ap][tx]: M0 x N^A, includes sqrt(p_w)
  RMat coupling;                     // |J_R| x K, receiver-beam gain per NR user
  std::vector<int> rank;             // SIC position per user, 0 decodes first

  RVec weight;     // V0 (Q + Zc) tau + 1
  RVec gamma_max;  // SINR ceiling implied by the backlog
  RVec backlog;    // Q
  double tau = 1.0;
  double p_max = 1.0;
  double i_max = 0.0;
  double zw = 0.0;
  double v1 = 0.0;
  double gamma_min = 0.0;         // 2^{R_min} - 1
  std::vector<char> rmin_active;  // per user: minimum-rate constraint enforced

  int num_beams() const { return num_aps * rf_chains; }
  int beam_ap(int u) const { return u / rf_chains; }
  int beam_slot(int u) const { return u % rf_chains; }
  int num_tx() const { return y.empty() ? 0 : static_cast<int>(y[0].size()); }
  int num_rx() const { return static_cast<int>(coupling.rows()); }
  const CVec channel(int u, int k) const { return h[beam_ap(u)].col(k); }
  /// Interference-penalty weight per user: sum over receivers of the coupling.
  RVec coupling_sum() const {
    return coupling.rows() > 0 ? RVec(coupling.colwise().sum().transpose()) : RVec(RVec::Zero(num_users));
  }
};

/// True when (u2, k2) interferes with user k decoded on beam u.
inline bool interferes(const SpInstance& in, int u, int k, int u2, int k2) {
  if (k2 == k) return false;
  if (u2 != u) return true;
  return in.rank[k2] > in.rank[k];
}

/// Builds the per-SP instance from an episode environment and queue state.
inline SpInstance make_instance(const Scenario& s, const Environment& env, const QueueState& qs, int t) {
  SpInstance in;
  in.num_users = s.num_users;
  in.num_aps = s.num_nr_aps;
  in.rf_chains = s.nr_rf_chains;
  in.antennas = s.nr_antennas;
  const double inv_sigma = 1.0 / std::sqrt(s.noise_mw());
  in.h.resize(s.num_nr_aps);
  for (int i = 0; i < s.num_nr_aps; ++i) {
    in.h[i].resize(s.nr_antennas, s.num_users);
    for (int k = 0; k < s.num_users; ++k) in.h[i].col(k) = env.channels.h[i][k] * inv_sigma;
  }
  const auto tx = env.wigig.tx_sched(t);
  in.y.resize(s.num_nr_aps);
  for (int i = 0; i < s.num_nr_aps; ++i)
    for (int a : tx)
      in.y[i].push_back(effective_wigig_channel(env.channels, env.wigig, i, a, t) *
                        (std::sqrt(env.wigig.p_w[a]) * inv_sigma));
  const auto rx = env.wigig.rx_sched(t);
  in.coupling.resize(static_cast<Eigen::Index>(rx.size()), s.num_users);
  for (std::size_t j = 0; j < rx.size(); ++j)
    for (int k = 0; k < s.num_users; ++k)
      in.coupling(static_cast<Eigen::Index>(j), k) =
          std::norm(env.wigig.v_user[rx[j]].dot(env.channels.gw[rx[j]][k]));
  in.rank = sic_rank(sic_order(qs));
  in.tau = s.tau_s();
  in.backlog = qs.q;
  in.weight = (s.v0 * (qs.q + qs.zc) * in.tau).array() + 1.0;
  in.gamma_max.resize(s.num_users);
  for (int k = 0; k < s.num_users; ++k)
    in.gamma_max(k) = std::min(std::exp2(qs.q(k) / in.tau) - 1.0, s.gamma_cap);
  in.p_max = s.p_max_mw();
  in.i_max = s.inr_max_mw();
  in.zw = qs.zw;
  in.v1 = s.v1;
  in.gamma_min = std::exp2(s.r_min) - 1.0;
  in.rmin_active.assign(s.num_users, 1);
  return in;
}

/// Hybrid NR decision for one SP.
struct Decision {
  RMat x;               // U x K grouping
  std::vector<CMat> f;  // per NR AP: M0 x N0 unit-modulus analog stage
  std::vector<CMat> d;  // per NR AP: N0 x N0 digital stage
  RVec p;               // transmit power per user, mW

  /// Effective combiners w_u = F_{I(u)} d_u stacked as M0 x U.
  CMat beams() const {
    if (f.empty()) return CMat();
    const Eigen::Index n0 = f[0].cols();
    CMat w(f[0].rows(), n0 * static_cast<Eigen::Index>(f.size()));
    for (std::size_t i = 0; i < f.size(); ++i)
      w.middleCols(static_cast<Eigen::Index>(i) * n0, n0) = f[i] * d[i];
    return w;
  }
};

/// |w_u^H h_{I(u),k}|^2 for every beam and user.
inline RMat beam_gains(const SpInstance& in, const CMat& w) {
  const int u_count = in.num_beams();
  RMat g(u_count, in.num_users);
  for (int u = 0; u < u_count; ++u)
    g.row(u) = (w.col(u).adjoint() * in.h[in.beam_ap(u)]).cwiseAbs2();
  return g;
}

/// ||w_u^H Y_{I(u),j}||^2 for every beam and transmitting WiGig AP.
inline RMat wigig_gains(const SpInstance& in, const CMat& w) {
  const int u_count = in.num_beams();
  RMat xi(u_count, in.num_tx());
  for (int u = 0; u < u_count; ++u)
    for (int j = 0; j < in.num_tx(); ++j)
      xi(u, j) = (w.col(u).adjoint() * in.y[in.beam_ap(u)][j]).squaredNorm();
  return xi;
}

struct RateResult {
  RMat gamma;  // U x K
  RMat rate;   // U x K, bit/s/Hz
  RVec user_rate;
  double total() const { return user_rate.sum(); }
};

/// SINR after SIC and resulting rates for a decision (combiner W = F D).
inline RateResult sinr_and_rate(const SpInstance& in, const RMat& x, const RVec& p, const CMat& w) {
  const int u_count = in.num_beams();
  const int k_count = in.num_users;
  if (x.rows() != u_count || x.cols() != k_count || p.size() != k_count || w.cols() != u_count ||
      w.rows() != in.antennas)
    throw DimensionError("sinr_and_rate: decision dimensions do not match the instance");
  const RMat g = beam_gains(in, w);
  const RMat xi = wigig_gains(in, w);
  RateResult r;
  r.gamma = RMat::Zero(u_count, k_count);
  for (int u = 0; u < u_count; ++u)
    for (int k = 0; k < k_count; ++k) {
      double denom = 1.0 + xi.row(u).sum();
      for (int u2 = 0; u2 < u_count; ++u2)
        for (int k2 = 0; k2 < k_count; ++k2)
          if (interferes(in, u, k, u2, k2)) denom += x(u2, k2) * g(u, k2) * p(k2);
      r.gamma(u, k) = x(u, k) * g(u, k) * p(k) / denom;
    }
  r.rate = (1.0 + r.gamma.array()).log() / kLn2;
  r.user_rate = r.rate.colwise().sum().transpose();
  return r;
}

inline RateResult sinr_and_rate(const SpInstance& in, const Decision& dec) {
  return sinr_and_rate(in, dec.x, dec.p, dec.beams());
}

struct InterferenceResult {
  RVec per_rx;  // mW at each receiving WiGig user
  double total = 0.0;
  double max() const { return per_rx.size() ? per_rx.maxCoeff() : 0.0; }
};

/// Inter-RAT interference at the receiving WiGig users.
inline InterferenceResult wigig_interference(const SpInstance& in, const RMat& x, const RVec& p) {
  InterferenceResult r;
  const RVec eff = x.colwise().sum().transpose().cwiseProduct(p);
  r.per_rx = in.coupling * eff;
  r.total = r.per_rx.sum();
  return r;
}

/// Auxiliary gains of the transformed problem.
struct EffectiveGains {
  std::vector<RMat> mu;  // [u]: U x K, entry (u', k) = x_{u'k} |w_u^H h_{I(u),k}|^2 p_k
  RMat xi;               // U x J_T
  RMat gamma;            // U x K, mu_{u,u,k} / Lambda_{u,k}
};

/// Interference-plus-noise term built from auxiliary gains.
inline double aggregate_interference(const SpInstance& in, const RMat& mu_u, const RVec& xi_u, int u, int k) {
  double lam = 1.0 + xi_u.sum();
  for (int u2 = 0; u2 < mu_u.rows(); ++u2)
    for (int k2 = 0; k2 < mu_u.cols(); ++k2)
      if (interferes(in, u, k, u2, k2)) lam += mu_u(u2, k2);
  return lam;
}

inline EffectiveGains effective_gains(const SpInstance& in, const RMat& x, const RVec& p, const CMat& w) {
  const int u_count = in.num_beams();
  if (w.cols() != u_count) throw DimensionError("effective_gains: W must have one column per beam");
  const RMat g = beam_gains(in, w);
  EffectiveGains e;
  e.xi = wigig_gains(in, w);
  e.mu.resize(u_count);
  for (int u = 0; u < u_count; ++u) {
    e.mu[u].resize(u_count, in.num_users);
    for (int u2 = 0; u2 < u_count; ++u2)
      for (int k = 0; k < in.num_users; ++k) e.mu[u](u2, k) = x(u2, k) * g(u, k) * p(k);
  }
  e.gamma.resize(u_count, in.num_users);
  for (int u = 0; u < u_count; ++u)
    for (int k = 0; k < in.num_users; ++k)
      e.gamma(u, k) = e.mu[u](u, k) / aggregate_interference(in, e.mu[u], e.xi.row(u).transpose(), u, k);
  return e;
}

/// Rate the queue can actually absorb: min(R_k, Q_k / tau) summed over users.
inline RVec served_rate(const SpInstance& in, const RVec& user_rate) {
  RVec r(user_rate.size());
  for (Eigen::Index k = 0; k < user_rate.size(); ++k)
    r(k) = std::min(user_rate(k), in.backlog(k) / in.tau);
  return r;
}

/// Drift-plus-penalty objective of one decision, with rates clamped to the backlog.
inline double sp_objective(const SpInstance& in, const Decision& dec) {
  const RateResult r = sinr_and_rate(in, dec);
  const RVec served = served_rate(in, r.user_rate);
  const RVec a = in.coupling_sum();
  const RVec eff = dec.x.colwise().sum().transpose().cwiseProduct(dec.p);
  return (in.weight.array() * served.array()).sum() - in.v1 * in.zw * a.dot(eff);
}

}  // namespace nrucoex
