#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "nrucoex/pdd_state.hpp"
#include "nrucoex/qp.hpp"
#include "nrucoex/types.hpp"

namespace nrucoex {

struct SolverSettings {
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
  bool cluster_init = true;
  double cluster_threshold = 0.5;
  int starts = 3;

  static SolverSettings from(const Scenario& s) {
    return {s.rho0,      s.eta,          s.delta0,  s.eps1,
            s.eps2,      s.n_bcu_max,    s.n_abf_max, s.abf_tol,
            s.max_outer, s.grad_tol,     s.grad_max_steps, s.qp_tol,
            s.solver_init == "cluster",  s.semi_orth_threshold, s.solver_starts};
  }
};

/// Lower and upper SINR limits for user k on beam u given the grouping weight.
inline std::pair<double, double> sinr_bounds(const SpInstance& in, double x_uk, int k) {
  const double hi = in.gamma_max(k);
  const double lo = in.rmin_active[k] ? std::min(std::max(0.0, x_uk * in.gamma_min), hi) : 0.0;
  return {lo, hi};
}

/// Maximizer of w log2(1+g) - (g L - mu + rho lam)^2 / (2 rho) over g > -1.
inline double sinr_root(double weight, double lambda_agg, double mu_own, double lam_gamma, double rho) {
  const double l2 = lambda_agg * lambda_agg;
  const double e = lambda_agg * (rho * lam_gamma - mu_own);
  const double q = rho * weight / kLn2;
  const double disc = std::sqrt((e - l2) * (e - l2) + 4.0 * q * l2);
  const double b = e + l2;
  if (b > 0.0) return 2.0 * (q - e) / (b + disc);
  return (disc - b) / (2.0 * l2);
}

/// Grouping and SINR block.
inline void solve_grouping_sinr(const SpInstance& in, PrimalState& s, const DualState& d,
                                const CccpTerms& z, double qp_tol = 1e-10) {
  const int u_count = in.num_beams();
  const double rho = d.rho;
  const RMat g = beam_gains(in, s.w);
  for (int k = 0; k < in.num_users; ++k) {
    const double g2 = g.col(k).squaredNorm();
    const double pk = s.p(k);
    RMat hess = RMat::Ones(u_count, u_count);
    RVec lin(u_count);
    for (int u = 0; u < u_count; ++u) {
      const double one_minus = 1.0 - s.xt(u, k);
      hess(u, u) += pk * pk * g2 + 1.0 + one_minus * one_minus;
      double zsum = 0.0;
      for (int u2 = 0; u2 < u_count; ++u2) zsum += z.user[u2](u, k);
      lin(u) = -pk * zsum + (rho * d.lam_u(k) - 1.0) + (rho * d.lam_x(u, k) - s.xt(u, k)) +
               rho * d.lam_xt(u, k) * one_minus;
    }
    const RVec unconstrained = hess.ldlt().solve(-lin);
    if ((unconstrained.array() >= 0.0).all() && (unconstrained.array() <= 1.0).all()) {
      s.x.col(k) = unconstrained;
    } else {
      const QpResult r = solve_box_qp(2.0 * hess, 2.0 * lin, RVec::Zero(u_count), RVec::Ones(u_count),
                                      s.x.col(k), qp_tol);
      s.x.col(k) = r.z.cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  for (int u = 0; u < u_count; ++u)
    for (int k = 0; k < in.num_users; ++k) {
      const double lam = aggregate_interference(in, s.mu[u], s.xi.row(u).transpose(), u, k);
      const double root = sinr_root(in.weight(k), lam, s.mu[u](u, k), d.lam_gamma(u, k), rho);
      const auto [lo, hi] = sinr_bounds(in, s.x(u, k), k);
      s.gamma(u, k) = std::clamp(root, lo, hi);
    }
}

/// Data of the power subproblem: min sum (q p^2 - 2 r p)/(2 rho) + c p.
struct PowerProblem {
  RVec quad;
  RVec lin;
  RVec cost;  // V1 Zw coupling per user
  RVec upper;
};

inline PowerProblem power_problem(const SpInstance& in, const PrimalState& s, const DualState& d,
                                  const CccpTerms& z) {
  const int u_count = in.num_beams();
  const RMat g = beam_gains(in, s.w);
  PowerProblem pp;
  pp.quad.resize(in.num_users);
  pp.lin.resize(in.num_users);
  pp.upper.resize(in.num_users);
  pp.cost = in.v1 * in.zw * in.coupling_sum();
  (void)d;
  for (int k = 0; k < in.num_users; ++k) {
    pp.quad(k) = s.x.col(k).squaredNorm() * g.col(k).squaredNorm();
    double r = 0.0;
    for (int u = 0; u < u_count; ++u)
      for (int u2 = 0; u2 < u_count; ++u2) r += s.x(u2, k) * z.user[u](u2, k);
    pp.lin(k) = r;
    pp.upper(k) = in.p_max * std::clamp(s.x.col(k).sum(), 0.0, 1.0);
  }
  return pp;
}

/// Solves the power QP under the box and per-receiver interference caps.
inline RVec solve_power_problem(const SpInstance& in, const PowerProblem& pp, double rho, const RVec& start,
                                double qp_tol = 1e-10) {
  const int k_count = in.num_users;
  std::vector<int> free;
  for (int k = 0; k < k_count; ++k)
    if (pp.upper(k) > 0.0) free.push_back(k);
  RVec p = RVec::Zero(k_count);
  if (free.empty()) return p;
  const int n = static_cast<int>(free.size());
  const int jr = in.num_rx();

  RVec hdiag(n);
  for (int i = 0; i < n; ++i) hdiag(i) = pp.quad(free[i]) / rho;
  const double floor = std::max(1e-12, 1e-12 * hdiag.maxCoeff());
  QpProblem qp;
  qp.h = RMat::Zero(n, n);
  qp.c.resize(n);
  for (int i = 0; i < n; ++i) {
    qp.h(i, i) = std::max(hdiag(i), floor);
    qp.c(i) = -pp.lin(free[i]) / rho + pp.cost(free[i]);
  }
  qp.a = RMat::Zero(2 * n + jr, n);
  qp.b = RVec::Zero(2 * n + jr);
  for (int i = 0; i < n; ++i) {
    qp.a(2 * i, i) = 1.0;
    qp.b(2 * i) = pp.upper(free[i]);
    qp.a(2 * i + 1, i) = -1.0;
  }
  for (int j = 0; j < jr; ++j) {
    for (int i = 0; i < n; ++i) qp.a(2 * n + j, i) = in.coupling(j, free[i]) / in.i_max;
    qp.b(2 * n + j) = 1.0;
  }
  RVec z0(n);
  for (int i = 0; i < n; ++i) z0(i) = std::clamp(start.size() ? start(free[i]) : 0.0, 0.0, pp.upper(free[i]));
  if (jr > 0) {
    const double worst = (qp.a.bottomRows(jr) * z0).maxCoeff();
    if (worst > 1.0) z0 *= 1.0 / worst;
  }
  const QpResult r = solve_qp(qp, z0, qp_tol);
  for (int i = 0; i < n; ++i) p(free[i]) = std::clamp(r.z(i), 0.0, pp.upper(free[i]));
  if (jr > 0) {
    // Guard against round-off pushing a cap marginally above its limit.
    const double worst = (in.coupling * p).maxCoeff() / in.i_max;
    if (worst > 1.0) p /= worst;
  }
  return p;
}

inline void solve_power(const SpInstance& in, PrimalState& s, const DualState& d, const CccpTerms& z,
                        double qp_tol = 1e-10) {
  s.p = solve_power_problem(in, power_problem(in, s, d, z), d.rho, s.p, qp_tol);
}

/// Objective of the analog subproblem: ||F D||^2 - 2 Re tr(F^H C).
inline double analog_objective(const CMat& f, const CMat& dtilde, const CMat& c) {
  return (f.adjoint() * f * dtilde).trace().real() - 2.0 * (f.adjoint() * c).trace().real();
}

struct AnalogTrace {
  std::vector<double> objective;  // after each sweep, first entry is the start
  int sweeps = 0;
};

/// Element-wise unit-modulus BCU on one AP's analog stage.
inline AnalogTrace analog_bcu(CMat& f, const CMat& dtilde, const CMat& c, int max_sweeps, double tol) {
  AnalogTrace tr;
  CMat u = f * dtilde;
  tr.objective.push_back(analog_objective(f, dtilde, c));
  for (tr.sweeps = 0; tr.sweeps < max_sweeps;) {
    for (Eigen::Index m = 0; m < f.rows(); ++m)
      for (Eigen::Index n = 0; n < f.cols(); ++n) {
        const cplx b = f(m, n) * dtilde(n, n) - u(m, n) + c(m, n);
        const double mag = std::abs(b);
        if (!(mag > 0.0)) continue;
        const cplx next = b / mag;
        u.row(m) += (next - f(m, n)) * dtilde.row(n);
        f(m, n) = next;
      }
    ++tr.sweeps;
    tr.objective.push_back(analog_objective(f, dtilde, c));
    const double prev = tr.objective[tr.objective.size() - 2];
    const double cur = tr.objective.back();
    if (std::abs(prev - cur) <= tol * std::max(1.0, std::abs(prev))) break;
  }
  return tr;
}

inline void solve_analog_bf(const SpInstance& in, PrimalState& s, const DualState& d, int max_sweeps,
                            double tol) {
  const int n0 = in.rf_chains;
  for (int i = 0; i < in.num_aps; ++i) {
    const CMat target = s.w.middleCols(i * n0, n0) + d.rho * d.lam_w.middleCols(i * n0, n0);
    const CMat c = target * s.d[i].adjoint();
    const CMat dtilde = s.d[i] * s.d[i].adjoint();
    analog_bcu(s.f[i], dtilde, c, max_sweeps, tol);
  }
}

/// Per-beam convex subproblem of the combiner block, in real coordinates.
/// phi(w) = ||w - v||^2 + sum_q [a_q g_q^2 - 2 b_q lin_q + 2 c_q g_q],
/// g_q = w^H A_q w, lin_q its tangent at the anchor.
struct BeamProblem {
  RVec v;                       // target, real embedding
  RVec anchor;                  // real embedding of the anchor
  std::vector<const RMat*> a;   // real embeddings of A_q
  std::vector<double> quartic;  // a_q
  std::vector<double> tangent;  // b_q
  std::vector<double> convex;   // c_q

  double value(const RVec& z) const {
    double phi = (z - v).squaredNorm();
    for (std::size_t q = 0; q < a.size(); ++q) {
      const RVec az = *a[q] * z;
      const double g = z.dot(az);
      const double lin = 2.0 * anchor.dot(az) - anchor.dot(*a[q] * anchor);
      phi += quartic[q] * g * g - 2.0 * tangent[q] * lin + 2.0 * convex[q] * g;
    }
    return phi;
  }

  RVec gradient(const RVec& z) const {
    RVec grad = 2.0 * (z - v);
    for (std::size_t q = 0; q < a.size(); ++q) {
      const RVec az = *a[q] * z;
      const double g = z.dot(az);
      grad += (4.0 * quartic[q] * g + 4.0 * convex[q]) * az - 4.0 * tangent[q] * (*a[q] * anchor);
    }
    return grad;
  }

  RMat hessian(const RVec& z) const {
    const Eigen::Index n = z.size();
    RMat hess = 2.0 * RMat::Identity(n, n);
    for (std::size_t q = 0; q < a.size(); ++q) {
      if (quartic[q] == 0.0 && convex[q] == 0.0) continue;
      const RVec az = *a[q] * z;
      const double g = z.dot(az);
      hess.noalias() += (4.0 * quartic[q] * g + 4.0 * convex[q]) * *a[q];
      hess.noalias() += 8.0 * quartic[q] * az * az.transpose();
    }
    return hess;
  }
};

struct NewtonResult {
  RVec z;
  int steps = 0;
  double grad_norm = 0.0;
};

/// Damped Newton with Armijo backtracking; falls back to the gradient if the
/// Newton direction is not a descent direction.
inline NewtonResult minimize_beam(const BeamProblem& bp, const RVec& start, double grad_tol, int max_steps) {
  NewtonResult r;
  r.z = start;
  double phi = bp.value(r.z);
  for (r.steps = 0; r.steps < max_steps; ++r.steps) {
    const RVec grad = bp.gradient(r.z);
    r.grad_norm = grad.norm();
    if (r.grad_norm <= grad_tol) return r;
    RVec dir = -bp.hessian(r.z).llt().solve(grad);
    double slope = grad.dot(dir);
    if (!std::isfinite(slope) || slope >= 0.0) {
      dir = -grad;
      slope = -r.grad_norm * r.grad_norm;
    }
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const RVec trial = r.z + step * dir;
      const double val = bp.value(trial);
      if (val <= phi + 1e-4 * step * slope) {
        r.z = trial;
        phi = val;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  r.grad_norm = bp.gradient(r.z).norm();
  return r;
}

/// Real embeddings of h h^H and Y Y^H, shared across iterations of one solve.
struct EmbeddedChannels {
  std::vector<std::vector<RMat>> user;   // [ap][k]
  std::vector<std::vector<RMat>> wigig;  // [ap][j]

  explicit EmbeddedChannels(const SpInstance& in) {
    user.resize(in.num_aps);
    wigig.resize(in.num_aps);
    for (int i = 0; i < in.num_aps; ++i) {
      for (int k = 0; k < in.num_users; ++k) {
        const CVec h = in.h[i].col(k);
        user[i].push_back(embed_hermitian(h * h.adjoint()));
      }
      for (int j = 0; j < in.num_tx(); ++j) wigig[i].push_back(embed_hermitian(in.y[i][j] * in.y[i][j].adjoint()));
    }
  }
};

inline BeamProblem beam_problem(const SpInstance& in, const PrimalState& s, const DualState& d,
                                const EmbeddedChannels& emb, const CMat& anchor, int u) {
  const int u_count = in.num_beams();
  const int i = in.beam_ap(u);
  const double rho = d.rho;
  BeamProblem bp;
  bp.v = to_real(s.fd().col(u) - rho * d.lam_w.col(u));
  bp.anchor = to_real(anchor.col(u));
  for (int k = 0; k < in.num_users; ++k) {
    double xsq = 0.0, tan = 0.0, cvx = 0.0;
    for (int u2 = 0; u2 < u_count; ++u2) {
      const double x = s.x(u2, k);
      const double lam = d.lam_mu[u](u2, k);
      xsq += x * x;
      tan += x * (s.mu[u](u2, k) + rho * pos(lam));
      cvx += x * rho * neg(lam);
    }
    const double pk = s.p(k);
    bp.a.push_back(&emb.user[i][k]);
    bp.quartic.push_back(pk * pk * xsq);
    bp.tangent.push_back(pk * tan);
    bp.convex.push_back(pk * cvx);
  }
  for (int j = 0; j < in.num_tx(); ++j) {
    const double lam = d.lam_xi(u, j);
    bp.a.push_back(&emb.wigig[i][j]);
    bp.quartic.push_back(1.0);
    bp.tangent.push_back(s.xi(u, j) + rho * pos(lam));
    bp.convex.push_back(rho * neg(lam));
  }
  return bp;
}

/// Least-squares digital stage: argmin_d ||target - F d||.
inline CVec digital_ls(const CMat& f, const CVec& target) {
  return (f.adjoint() * f).ldlt().solve(f.adjoint() * target);
}

/// Rescales d so that ||F d|| = sqrt(M0); a zero combiner is left unchanged.
inline CVec normalize_combiner(const CMat& f, const CVec& d) {
  const double nrm = (f * d).norm();
  if (!(nrm > 0.0)) return d;
  return d * (std::sqrt(static_cast<double>(f.rows())) / nrm);
}

/// Combiner block: W per beam by damped Newton, then D by normalized least squares.
inline int solve_digital_bf(const SpInstance& in, PrimalState& s, const DualState& d,
                            const EmbeddedChannels& emb, const CMat& anchor, double grad_tol, int max_steps) {
  const int n0 = in.rf_chains;
  int steps = 0;
  for (int u = 0; u < in.num_beams(); ++u) {
    const BeamProblem bp = beam_problem(in, s, d, emb, anchor, u);
    const NewtonResult nr = minimize_beam(bp, to_real(s.w.col(u)), grad_tol, max_steps);
    s.w.col(u) = to_complex(nr.z);
    steps += nr.steps;
  }
  for (int u = 0; u < in.num_beams(); ++u) {
    const int i = in.beam_ap(u);
    const int slot = in.beam_slot(u);
    const CVec target = s.w.col(u) + d.rho * d.lam_w.col(u);
    const CVec ls = digital_ls(s.f[i], target);
    if ((s.f[i] * ls).norm() > 0.0) s.d[i].col(slot) = normalize_combiner(s.f[i], ls);
  }
  (void)n0;
  return steps;
}

/// Least-squares form of the per-beam auxiliary subproblem: min ||A z - r||^2, z >= 0,
/// with z = [mu_u (column-major U x K); xi_u].
struct AuxProblem {
  RMat a;
  RVec r;
};

inline AuxProblem aux_problem(const SpInstance& in, const PrimalState& s, const DualState& d, int u) {
  const int u_count = in.num_beams();
  const int k_count = in.num_users;
  const int j_count = in.num_tx();
  const int n_mu = u_count * k_count;
  const int n = n_mu + j_count;
  const double rho = d.rho;
  const RMat g = beam_gains(in, s.w);
  const RMat xi_w = wigig_gains(in, s.w);
  AuxProblem ap;
  ap.a = RMat::Zero(n + k_count, n);
  ap.r = RVec::Zero(n + k_count);
  ap.a.topLeftCorner(n, n).setIdentity();
  for (int k = 0; k < k_count; ++k)
    for (int u2 = 0; u2 < u_count; ++u2)
      ap.r(k * u_count + u2) = s.x(u2, k) * g(u, k) * s.p(k) - rho * d.lam_mu[u](u2, k);
  for (int j = 0; j < j_count; ++j) ap.r(n_mu + j) = xi_w(u, j) - rho * d.lam_xi(u, j);
  for (int k = 0; k < k_count; ++k) {
    const int row = n + k;
    const double gam = s.gamma(u, k);
    for (int k2 = 0; k2 < k_count; ++k2)
      for (int u2 = 0; u2 < u_count; ++u2)
        if (interferes(in, u, k, u2, k2)) ap.a(row, k2 * u_count + u2) = gam;
    ap.a(row, k * u_count + u) -= 1.0;
    for (int j = 0; j < j_count; ++j) ap.a(row, n_mu + j) = gam;
    ap.r(row) = -(gam + rho * d.lam_gamma(u, k));
  }
  return ap;
}

/// Auxiliary block: effective gains per beam (nonnegative least squares) and
/// the clamped closed-form update of the grouping copy.
inline void solve_aux(const SpInstance& in, PrimalState& s, const DualState& d) {
  const int u_count = in.num_beams();
  const int k_count = in.num_users;
  const int n_mu = u_count * k_count;
  for (int u = 0; u < u_count; ++u) {
    const AuxProblem ap = aux_problem(in, s, d, u);
    const RMat h = 2.0 * ap.a.transpose() * ap.a;
    const RVec c = -2.0 * ap.a.transpose() * ap.r;
    const RVec z = solve_nonneg_qp(h, c);
    for (int k = 0; k < k_count; ++k)
      for (int u2 = 0; u2 < u_count; ++u2) s.mu[u](u2, k) = z(k * u_count + u2);
    for (int j = 0; j < in.num_tx(); ++j) s.xi(u, j) = z(n_mu + j);
  }
  for (int u = 0; u < u_count; ++u)
    for (int k = 0; k < k_count; ++k) {
      const double x = s.x(u, k);
      const double raw = (x * (x + 1.0) + d.rho * (d.lam_x(u, k) + d.lam_xt(u, k) * x)) / (1.0 + x * x);
      s.xt(u, k) = std::clamp(raw, 0.0, 1.0);
    }
}

}  // namespace nrucoex
