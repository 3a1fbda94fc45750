#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nrucoex/rate_model.hpp"
#include "nrucoex/types.hpp"

namespace nrucoex {

/// Decision blocks plus the auxiliary variables of the relaxed problem.
struct PrimalState {
  RMat x;               // U x K relaxed grouping
  RMat xt;              // U x K auxiliary copy in [0,1]
  std::vector<CMat> f;  // per NR AP: M0 x N0
  std::vector<CMat> d;  // per NR AP: N0 x N0
  RVec p;               // K, mW
  CMat w;               // M0 x U fully digital combiner
  RMat gamma;           // U x K
  std::vector<RMat> mu; // [u]: U x K
  RMat xi;              // U x J_T

  Decision decision() const { return {x, f, d, p}; }
  CMat fd() const { return decision().beams(); }
};

/// Multipliers of every equality family plus penalty bookkeeping.
struct DualState {
  RVec lam_u;                // K: sum_u x = 1
  RMat lam_x;                // U x K: x = xt
  RMat lam_xt;               // U x K: x (1 - xt) = 0
  CMat lam_w;                // M0 x U: w = F d
  std::vector<RMat> lam_mu;  // [u]: U x K
  RMat lam_xi;               // U x J_T
  RMat lam_gamma;            // U x K
  double rho = 0.5;
  double delta = 1.0;

  static DualState zeros(int u_count, int k_count, int j_count, int m0, double rho, double delta) {
    DualState d;
    d.lam_u = RVec::Zero(k_count);
    d.lam_x = RMat::Zero(u_count, k_count);
    d.lam_xt = RMat::Zero(u_count, k_count);
    d.lam_w = CMat::Zero(m0, u_count);
    d.lam_mu.assign(u_count, RMat::Zero(u_count, k_count));
    d.lam_xi = RMat::Zero(u_count, j_count);
    d.lam_gamma = RMat::Zero(u_count, k_count);
    d.rho = rho;
    d.delta = delta;
    return d;
  }
};

/// Constraint residuals of the seven equality families.
struct Residuals {
  RVec sum_x;              // K
  RMat x_copy;             // U x K
  RMat binary;             // U x K
  CMat coupling;           // M0 x U
  std::vector<RMat> mu;    // [u]: U x K
  RMat xi;                 // U x J_T
  RMat sinr;               // U x K

  /// Largest violation over all families (column norm for the combiner coupling).
  double violation() const {
    auto inf = [](const auto& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; };
    double h = std::max({inf(sum_x), inf(x_copy), inf(binary), inf(xi), inf(sinr)});
    for (Eigen::Index u = 0; u < coupling.cols(); ++u) h = std::max(h, coupling.col(u).norm());
    for (const auto& m : mu) h = std::max(h, inf(m));
    return h;
  }
};

inline Residuals residuals(const SpInstance& in, const PrimalState& s) {
  const int u_count = in.num_beams();
  Residuals r;
  r.sum_x = s.x.colwise().sum().transpose().array() - 1.0;
  r.x_copy = s.x - s.xt;
  r.binary = s.x.cwiseProduct((1.0 - s.xt.array()).matrix());
  r.coupling = s.w - s.fd();
  const RMat g = beam_gains(in, s.w);
  r.mu.resize(u_count);
  for (int u = 0; u < u_count; ++u) {
    r.mu[u] = s.mu[u];
    for (int u2 = 0; u2 < u_count; ++u2)
      for (int k = 0; k < in.num_users; ++k) r.mu[u](u2, k) -= s.x(u2, k) * g(u, k) * s.p(k);
  }
  r.xi = s.xi - wigig_gains(in, s.w);
  r.sinr.resize(u_count, in.num_users);
  for (int u = 0; u < u_count; ++u)
    for (int k = 0; k < in.num_users; ++k)
      r.sinr(u, k) = s.gamma(u, k) * aggregate_interference(in, s.mu[u], s.xi.row(u).transpose(), u, k) -
                     s.mu[u](u, k);
  return r;
}

/// Components of the augmented Lagrangian (maximization form).
struct AlTerms {
  double objective = 0.0;  // f
  double grouping = 0.0;   // L1
  double coupling = 0.0;   // L2
  double gains = 0.0;      // L3 or its CCCP surrogate
  double sinr = 0.0;       // L4
  double value() const { return objective - grouping - coupling - gains - sinr; }
};

inline double rate_objective(const SpInstance& in, const PrimalState& s) {
  double f = 0.0;
  for (int u = 0; u < in.num_beams(); ++u)
    for (int k = 0; k < in.num_users; ++k) f += in.weight(k) * std::log2(1.0 + s.gamma(u, k));
  return f - in.v1 * in.zw * in.coupling_sum().dot(s.p);
}

inline AlTerms al_terms(const SpInstance& in, const PrimalState& s, const DualState& d) {
  const Residuals r = residuals(in, s);
  const double rho = d.rho;
  auto pen = [rho](double res, double lam) {
    const double v = res + rho * lam;
    return v * v / (2.0 * rho);
  };
  AlTerms t;
  t.objective = rate_objective(in, s);
  for (int k = 0; k < in.num_users; ++k) t.grouping += pen(r.sum_x(k), d.lam_u(k));
  for (Eigen::Index i = 0; i < r.x_copy.size(); ++i) {
    t.grouping += pen(r.x_copy(i), d.lam_x(i));
    t.grouping += pen(r.binary(i), d.lam_xt(i));
  }
  t.coupling = (r.coupling + rho * d.lam_w).squaredNorm() / (2.0 * rho);
  for (std::size_t u = 0; u < r.mu.size(); ++u)
    for (Eigen::Index i = 0; i < r.mu[u].size(); ++i) t.gains += pen(r.mu[u](i), d.lam_mu[u](i));
  for (Eigen::Index i = 0; i < r.xi.size(); ++i) t.gains += pen(r.xi(i), d.lam_xi(i));
  for (Eigen::Index i = 0; i < r.sinr.size(); ++i) t.sinr += pen(r.sinr(i), d.lam_gamma(i));
  return t;
}

inline double al_value(const SpInstance& in, const PrimalState& s, const DualState& d) {
  return al_terms(in, s, d).value();
}

/// Linearized effective gains around an anchor combiner.
struct CccpTerms {
  std::vector<RMat> user;  // [u]: U x K, entry (u', k)
  RMat wigig;              // U x J_T
};

/// 2 Re{wbar^H Y Y^H w} - ||wbar^H Y||^2 for a tall Y.
inline double tangent_gain(const CVec& w, const CVec& anchor, const CMat& y) {
  const CVec yw = y.adjoint() * w;
  const CVec ya = y.adjoint() * anchor;
  return 2.0 * ya.dot(yw).real() - ya.squaredNorm();
}

inline CccpTerms cccp_linearize(const SpInstance& in, const PrimalState& s, const DualState& d,
                                const CMat& anchor) {
  if (anchor.rows() != s.w.rows() || anchor.cols() != s.w.cols())
    throw DimensionError("cccp_linearize: anchor must match W");
  const int u_count = in.num_beams();
  const double rho = d.rho;
  CccpTerms z;
  z.user.resize(u_count);
  z.wigig.resize(u_count, in.num_tx());
  for (int u = 0; u < u_count; ++u) {
    const int i = in.beam_ap(u);
    const CVec wu = s.w.col(u);
    const CVec au = anchor.col(u);
    z.user[u].resize(u_count, in.num_users);
    for (int k = 0; k < in.num_users; ++k) {
      const CVec hk = in.h[i].col(k);
      const double lin = tangent_gain(wu, au, hk);
      const double g = std::norm(hk.dot(wu));
      for (int u2 = 0; u2 < u_count; ++u2) {
        const double lam = d.lam_mu[u](u2, k);
        z.user[u](u2, k) = (s.mu[u](u2, k) + rho * pos(lam)) * lin - rho * neg(lam) * g;
      }
    }
    for (int j = 0; j < in.num_tx(); ++j) {
      const CMat& y = in.y[i][j];
      const double lin = tangent_gain(wu, au, y);
      const double g = (y.adjoint() * wu).squaredNorm();
      const double lam = d.lam_xi(u, j);
      z.wigig(u, j) = (s.xi(u, j) + rho * pos(lam)) * lin - rho * neg(lam) * g;
    }
  }
  return z;
}

/// CCCP surrogate of the gain penalty; upper-bounds the exact term when
/// x, p, mu, xi are nonnegative and equals it at the anchor.
inline double gains_surrogate(const SpInstance& in, const PrimalState& s, const DualState& d,
                              const CccpTerms& z) {
  const int u_count = in.num_beams();
  const double rho = d.rho;
  const RMat g = beam_gains(in, s.w);
  const RMat xi_w = wigig_gains(in, s.w);
  double acc = 0.0;
  for (int u = 0; u < u_count; ++u) {
    for (int u2 = 0; u2 < u_count; ++u2)
      for (int k = 0; k < in.num_users; ++k) {
        const double xgp = s.x(u2, k) * g(u, k) * s.p(k);
        const double shifted = s.mu[u](u2, k) + rho * d.lam_mu[u](u2, k);
        acc += xgp * xgp - 2.0 * z.user[u](u2, k) * s.x(u2, k) * s.p(k) + shifted * shifted;
      }
    for (int j = 0; j < in.num_tx(); ++j) {
      const double shifted = s.xi(u, j) + rho * d.lam_xi(u, j);
      acc += xi_w(u, j) * xi_w(u, j) - 2.0 * z.wigig(u, j) + shifted * shifted;
    }
  }
  return acc / (2.0 * rho);
}

/// Surrogate Lagrangian with the gain penalty replaced by its CCCP bound.
inline AlTerms al_surrogate_terms(const SpInstance& in, const PrimalState& s, const DualState& d,
                                  const CMat& anchor) {
  AlTerms t = al_terms(in, s, d);
  t.gains = gains_surrogate(in, s, d, cccp_linearize(in, s, d, anchor));
  return t;
}

inline double al_surrogate(const SpInstance& in, const PrimalState& s, const DualState& d, const CMat& anchor) {
  return al_surrogate_terms(in, s, d, anchor).value();
}

}  // namespace nrucoex
