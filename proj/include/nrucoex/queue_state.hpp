#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "nrucoex/types.hpp"

namespace nrucoex {

/// Traffic backlogs and Lyapunov virtual queues (bit/Hz, mW).
struct QueueState {
  RVec q;          // traffic backlog per user
  RVec zc;         // delay virtual queue per user
  double zw = 0.0; // WiGig interference virtual queue
  int t = 0;

  QueueState() = default;
  explicit QueueState(int num_users) : q(RVec::Zero(num_users)), zc(RVec::Zero(num_users)) {}
  int num_users() const { return static_cast<int>(q.size()); }
  bool operator==(const QueueState& o) const { return q == o.q && zc == o.zc && zw == o.zw && t == o.t; }
};

/// Poisson packet arrivals: `packet_size` bit/Hz packets at a mean of
/// `density` bit/s/Hz.
struct ArrivalProcess {
  double density = 0.0;
  double packet_size = 0.01;

  double mean_packets(double tau) const { return density * tau / packet_size; }

  RVec draw(std::mt19937_64& rng, int num_users, double tau) const {
    RVec a = RVec::Zero(num_users);
    const double mean = mean_packets(tau);
    if (mean <= 0.0) return a;
    std::poisson_distribution<long long> pois(mean);
    for (int k = 0; k < num_users; ++k) a(k) = packet_size * static_cast<double>(pois(rng));
    return a;
  }

  /// Smallest arrival amount whose CDF reaches `quantile`.
  double quantile_arrival(double tau, double quantile) const {
    const double mean = mean_packets(tau);
    if (mean <= 0.0) return 0.0;
    double log_pmf = -mean;
    double cdf = std::exp(log_pmf);
    long long n = 0;
    while (cdf < quantile && n < 100000000LL) {
      ++n;
      log_pmf += std::log(mean) - std::log(static_cast<double>(n));
      cdf += std::exp(log_pmf);
    }
    return packet_size * static_cast<double>(n);
  }
};

/// One service-period update of every queue.
inline QueueState step_queues(const QueueState& s, const RVec& rate, double tau, const RVec& arrivals,
                              double i_w, double i_bar, const RVec& q_bar) {
  const int k_count = s.num_users();
  if (rate.size() != k_count || arrivals.size() != k_count || q_bar.size() != k_count)
    throw DimensionError("step_queues: per-user vector length mismatch");
  if (!(tau >= 0.0) || !(i_w >= 0.0) || !(i_bar >= 0.0))
    throw std::invalid_argument("step_queues: negative tau or interference");
  if ((rate.array() < 0.0).any() || (arrivals.array() < 0.0).any() || (q_bar.array() < 0.0).any())
    throw std::invalid_argument("step_queues: negative rate, arrival or delay bound");

  QueueState n = s;
  for (int k = 0; k < k_count; ++k) {
    n.q(k) = pos(s.q(k) - rate(k) * tau) + arrivals(k);
    n.zc(k) = pos(s.zc(k) - q_bar(k) + n.q(k));
  }
  n.zw = pos(s.zw - i_bar + i_w);
  n.t = s.t + 1;
  return n;
}

/// Decoding order: ascending Q + Zc, ties by user index.
inline std::vector<int> sic_order(const QueueState& s) {
  std::vector<int> order(s.num_users());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return s.q(a) + s.zc(a) < s.q(b) + s.zc(b); });
  return order;
}

/// rank[k] = position of user k in the decoding order.
inline std::vector<int> sic_rank(const std::vector<int>& order) {
  std::vector<int> rank(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
  return rank;
}

/// Constants entering the drift-plus-penalty bound.
struct DriftParams {
  double v0 = 0.0;
  double v1 = 0.0;
  double tau = 0.0;
  RVec q_bar;          // delay bounds per user
  RVec a_max;          // arrival maxima per user
  double i_bar = 0.0;  // long-term interference cap
  int num_rx = 0;      // receiving WiGig users
  double i_max = 0.0;  // per-receiver cap
};

struct DriftTerms {
  double reward = 0.0;  // per-SP objective of the drift-plus-penalty problem
  double b1 = 0.0;
  double b2 = 0.0;
};

/// Per-SP reward sum R + V0 sum (Q+Zc) R tau - V1 Zw I, and the bound constants.
inline DriftTerms drift_penalty_terms(const QueueState& s, const RVec& rate, double i_w,
                                      const DriftParams& p) {
  DriftTerms d;
  d.reward = rate.sum() + p.v0 * ((s.q + s.zc).array() * rate.array()).sum() * p.tau - p.v1 * s.zw * i_w;
  if (p.q_bar.size() == s.num_users() && p.a_max.size() == s.num_users()) {
    const double cap = p.num_rx * p.i_max;
    d.b1 = p.v0 * (p.q_bar.squaredNorm() + p.a_max.squaredNorm()) / 2.0 +
           p.v1 * (p.i_bar * p.i_bar + cap * cap) / 2.0;
    d.b2 = p.v0 * (s.q.squaredNorm() + (s.zc.array() * (s.q - p.q_bar).array()).sum());
  }
  return d;
}

/// Realized one-step drift-plus-penalty versus its analytic upper bound.
struct DriftCheck {
  double drift = 0.0;
  double bound = 0.0;
  bool holds() const { return drift <= bound + 1e-9 * std::max(1.0, std::abs(bound)); }
};

inline DriftCheck drift_bound_check(const QueueState& before, const QueueState& after, const RVec& rate,
                                    double i_w, const DriftParams& p) {
  const DriftTerms t = drift_penalty_terms(before, rate, i_w, p);
  DriftCheck c;
  const double dzc = 0.5 * (after.zc.squaredNorm() - before.zc.squaredNorm());
  const double dzw = 0.5 * (after.zw * after.zw - before.zw * before.zw);
  c.drift = p.v0 * dzc + p.v1 * dzw - rate.sum();
  c.bound = t.b1 + t.b2 + p.v1 * i_w * (before.zw - p.i_bar) -
            p.v0 * ((before.q + before.zc).array() * rate.array()).sum() * p.tau - rate.sum();
  return c;
}

}  // namespace nrucoex
