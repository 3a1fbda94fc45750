#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "nrucoex/types.hpp"

namespace nrucoex {

/// min 0.5 z'Hz + c'z  subject to  A z <= b.
struct QpProblem {
  RMat h;
  RVec c;
  RMat a;
  RVec b;

  double objective(const RVec& z) const { return 0.5 * z.dot(h * z) + c.dot(z); }
  double max_violation(const RVec& z) const {
    if (a.rows() == 0) return 0.0;
    return std::max(0.0, (a * z - b).maxCoeff());
  }
};

struct QpResult {
  RVec z;
  RVec multipliers;  // one per row of A, zero when inactive
  int iterations = 0;
  bool converged = false;
};

/// Primal active-set method for convex QPs started from a feasible point.
/// H must be positive definite on the null space of every working set met.
inline QpResult solve_qp(const QpProblem& qp, const RVec& start, double tol = 1e-10, int max_iter = 500) {
  const Eigen::Index n = qp.h.rows();
  const Eigen::Index m = qp.a.rows();
  if (qp.h.cols() != n || qp.c.size() != n || start.size() != n || (m > 0 && qp.a.cols() != n) ||
      qp.b.size() != m)
    throw DimensionError("solve_qp: inconsistent problem dimensions");

  const double scale = std::max(1.0, qp.b.size() ? qp.b.cwiseAbs().maxCoeff() : 1.0);
  const double feas_tol = 1e-9 * scale;
  if (qp.max_violation(start) > feas_tol) throw std::invalid_argument("solve_qp: start point is infeasible");

  QpResult res;
  res.z = start;
  res.multipliers = RVec::Zero(m);
  std::vector<int> work;

  auto independent_with = [&](int row) {
    if (work.empty()) return qp.a.row(row).norm() > 0.0;
    RMat aw(work.size() + 1, n);
    for (std::size_t i = 0; i < work.size(); ++i) aw.row(static_cast<Eigen::Index>(i)) = qp.a.row(work[i]);
    aw.row(static_cast<Eigen::Index>(work.size())) = qp.a.row(row);
    return Eigen::FullPivLU<RMat>(aw).rank() == static_cast<Eigen::Index>(work.size() + 1);
  };
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::abs(qp.a.row(i).dot(res.z) - qp.b(i)) <= feas_tol && independent_with(static_cast<int>(i)))
      work.push_back(static_cast<int>(i));

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    const Eigen::Index w = static_cast<Eigen::Index>(work.size());
    RMat kkt = RMat::Zero(n + w, n + w);
    RVec rhs = RVec::Zero(n + w);
    kkt.topLeftCorner(n, n) = qp.h;
    for (Eigen::Index i = 0; i < w; ++i) {
      kkt.block(n + i, 0, 1, n) = qp.a.row(work[i]);
      kkt.block(0, n + i, n, 1) = qp.a.row(work[i]).transpose();
    }
    rhs.head(n) = -(qp.h * res.z + qp.c);
    const RVec sol = kkt.fullPivLu().solve(rhs);
    const RVec step = sol.head(n);

    const double step_scale = std::max(1.0, res.z.cwiseAbs().maxCoeff());
    if (step.cwiseAbs().maxCoeff() <= tol * step_scale) {
      // Stationary on the working set: check multiplier signs.
      int drop = -1;
      double most_negative = -tol * std::max(1.0, qp.c.cwiseAbs().maxCoeff());
      for (Eigen::Index i = 0; i < w; ++i)
        if (sol(n + i) < most_negative) most_negative = sol(n + i), drop = static_cast<int>(i);
      if (drop < 0) {
        res.multipliers.setZero();
        for (Eigen::Index i = 0; i < w; ++i) res.multipliers(work[i]) = std::max(0.0, sol(n + i));
        res.converged = true;
        return res;
      }
      work.erase(work.begin() + drop);
      continue;
    }

    double alpha = 1.0;
    int blocking = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::find(work.begin(), work.end(), static_cast<int>(i)) != work.end()) continue;
      const double ap = qp.a.row(i).dot(step);
      if (ap <= 0.0) continue;
      const double slack = std::max(0.0, qp.b(i) - qp.a.row(i).dot(res.z));
      const double ratio = slack / ap;
      if (ratio < alpha) alpha = ratio, blocking = static_cast<int>(i);
    }
    res.z += alpha * step;
    if (blocking >= 0) work.push_back(blocking);
  }
  return res;
}

/// min 0.5 z'Hz + c'z subject to z >= 0, H positive definite. Primal active
/// set on the bounds, started from the clipped unconstrained minimizer.
inline RVec solve_nonneg_qp(const RMat& h, const RVec& c, double tol = 1e-12, int max_iter = 500) {
  const Eigen::Index n = h.rows();
  if (h.cols() != n || c.size() != n) throw DimensionError("solve_nonneg_qp: inconsistent dimensions");
  RVec z = h.llt().solve(-c);
  if ((z.array() >= 0.0).all()) return z;
  z = z.cwiseMax(0.0);
  std::vector<char> fixed(n);
  for (Eigen::Index i = 0; i < n; ++i) fixed[i] = z(i) <= 0.0;
  const double gscale = std::max(1.0, c.cwiseAbs().maxCoeff());

  for (int it = 0; it < max_iter; ++it) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!fixed[i]) free.push_back(i);
    const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
    RVec target = RVec::Zero(n);
    if (nf > 0) {
      RMat hf(nf, nf);
      RVec cf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        cf(a) = c(free[a]);
        for (Eigen::Index b = 0; b < nf; ++b) hf(a, b) = h(free[a], free[b]);
      }
      const RVec yf = hf.llt().solve(-cf);
      for (Eigen::Index a = 0; a < nf; ++a) target(free[a]) = yf(a);
    }
    // Move toward the subspace minimizer until a free variable hits zero.
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i : free)
      if (target(i) < 0.0) {
        const double ratio = z(i) / (z(i) - target(i));
        if (ratio < alpha) alpha = ratio, blocking = i;
      }
    z += alpha * (target - z);
    if (blocking >= 0) {
      z(blocking) = 0.0;
      fixed[blocking] = 1;
      continue;
    }
    const RVec grad = h * z + c;
    Eigen::Index release = -1;
    double most_negative = -tol * gscale;
    for (Eigen::Index i = 0; i < n; ++i)
      if (fixed[i] && grad(i) < most_negative) most_negative = grad(i), release = i;
    if (release < 0) return z.cwiseMax(0.0);
    fixed[release] = 0;
  }
  return z.cwiseMax(0.0);
}

/// Box-only convenience: lo <= z <= hi, started from the projection of `start`.
inline QpResult solve_box_qp(const RMat& h, const RVec& c, const RVec& lo, const RVec& hi, const RVec& start,
                             double tol = 1e-10) {
  const Eigen::Index n = h.rows();
  QpProblem qp{h, c, RMat::Zero(2 * n, n), RVec::Zero(2 * n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    qp.a(2 * i, i) = 1.0;
    qp.b(2 * i) = hi(i);
    qp.a(2 * i + 1, i) = -1.0;
    qp.b(2 * i + 1) = -lo(i);
  }
  RVec z0 = start.cwiseMax(lo).cwiseMin(hi);
  return solve_qp(qp, z0, tol);
}

}  // namespace nrucoex
