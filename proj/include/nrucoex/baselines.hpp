#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nrucoex/rate_model.hpp"
#include "nrucoex/types.hpp"

namespace nrucoex {

enum class BaselineKind { chs_hbf_fp, chs_hbf_ep };

inline std::string to_string(BaselineKind k) { return k == BaselineKind::chs_hbf_fp ? "chs_hbf_fp" : "chs_hbf_ep"; }

/// Binary grouping with the cluster head of every occupied beam (-1 if empty).
struct Grouping {
  RMat x;
  std::vector<int> heads;
};

inline double channel_correlation(const CVec& a, const CVec& b) {
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) return 0.0;
  return std::abs(a.dot(b)) / (na * nb);
}

/// Cluster-head grouping: users join their strongest AP; per AP the strongest
/// user heads the first beam, then the least correlated remaining user heads
/// the next beam while its correlation stays below `threshold`; every other
/// user joins the head it is most correlated with.
inline Grouping chs_grouping(const SpInstance& in, double threshold = 0.5) {
  const int u_count = in.num_beams();
  const int n0 = in.rf_chains;
  Grouping gr;
  gr.x = RMat::Zero(u_count, in.num_users);
  gr.heads.assign(u_count, -1);

  std::vector<std::vector<int>> members(in.num_aps);
  for (int k = 0; k < in.num_users; ++k) {
    int best = 0;
    for (int i = 1; i < in.num_aps; ++i)
      if (in.h[i].col(k).norm() > in.h[best].col(k).norm()) best = i;
    members[best].push_back(k);
  }

  for (int i = 0; i < in.num_aps; ++i) {
    auto& users = members[i];
    if (users.empty()) continue;
    auto chan = [&](int k) { return CVec(in.h[i].col(k)); };
    std::vector<int> heads;
    int first = users[0];
    for (int k : users)
      if (chan(k).norm() > chan(first).norm()) first = k;
    heads.push_back(first);
    while (static_cast<int>(heads.size()) < n0) {
      int pick = -1;
      double pick_corr = threshold;
      for (int k : users) {
        if (std::find(heads.begin(), heads.end(), k) != heads.end()) continue;
        double worst = 0.0;
        for (int hd : heads) worst = std::max(worst, channel_correlation(chan(k), chan(hd)));
        if (worst < pick_corr) pick_corr = worst, pick = k;
      }
      if (pick < 0) break;
      heads.push_back(pick);
    }
    for (std::size_t n = 0; n < heads.size(); ++n) {
      const int u = i * n0 + static_cast<int>(n);
      gr.heads[u] = heads[n];
    }
    for (int k : users) {
      int beam = -1;
      double best = -1.0;
      for (std::size_t n = 0; n < heads.size(); ++n) {
        const double c = heads[n] == k ? 2.0 : channel_correlation(chan(k), chan(heads[n]));
        if (c > best) best = c, beam = i * n0 + static_cast<int>(n);
      }
      gr.x(beam, k) = 1.0;
    }
  }
  return gr;
}

/// Hybrid combiner: analog columns phase-matched to the cluster heads, digital
/// stage zero-forcing across heads; combiners scaled to ||F d|| = sqrt(M0).
inline Decision hbf_zf(const SpInstance& in, const Grouping& gr) {
  const int n0 = in.rf_chains;
  const int m0 = in.antennas;
  Decision dec;
  dec.x = gr.x;
  dec.f.resize(in.num_aps);
  dec.d.resize(in.num_aps);
  for (int i = 0; i < in.num_aps; ++i) {
    CMat f = CMat::Ones(m0, n0);
    std::vector<int> slots;
    for (int n = 0; n < n0; ++n) {
      const int head = gr.heads[i * n0 + n];
      if (head < 0) continue;
      slots.push_back(n);
      for (int m = 0; m < m0; ++m) {
        const cplx v = in.h[i](m, head);
        f(m, n) = std::abs(v) > 0.0 ? v / std::abs(v) : cplx(1.0, 0.0);
      }
    }
    CMat d = CMat::Zero(n0, n0);
    if (!slots.empty()) {
      const int nh = static_cast<int>(slots.size());
      CMat hh(m0, nh);
      for (int s = 0; s < nh; ++s) hh.col(s) = in.h[i].col(gr.heads[i * n0 + slots[s]]);
      const CMat e = f.adjoint() * hh;  // N0 x nh
      CMat gram = e.adjoint() * e;
      const double ridge = 1e-12 * std::max(1e-300, gram.trace().real() / nh);
      gram += ridge * CMat::Identity(nh, nh);
      const CMat zf = e * gram.inverse();  // N0 x nh, zf^H e = I
      for (int s = 0; s < nh; ++s) {
        CVec col = zf.col(s);
        const double nrm = (f * col).norm();
        if (nrm > 0.0) col *= std::sqrt(static_cast<double>(m0)) / nrm;
        d.col(slots[s]) = col;
      }
    }
    dec.f[i] = f;
    dec.d[i] = d;
  }
  dec.p = RVec::Zero(in.num_users);
  return dec;
}

/// Fixed power (P^max shared within a beam) or equal power (P^max / K),
/// then scaled by the largest factor <= 1 meeting every receiver cap.
inline RVec baseline_power(BaselineKind kind, const RMat& x, const SpInstance& in) {
  const int k_count = static_cast<int>(x.cols());
  RVec p = RVec::Zero(k_count);
  const RVec occupancy = x.rowwise().sum();
  for (int k = 0; k < k_count; ++k) {
    if (kind == BaselineKind::chs_hbf_ep) {
      p(k) = in.p_max / k_count;
    } else {
      for (Eigen::Index u = 0; u < x.rows(); ++u)
        if (x(u, k) > 0.5) p(k) = in.p_max / occupancy(u);
    }
  }
  const InterferenceResult ir = wigig_interference(in, x, p);
  if (ir.per_rx.size() && ir.max() > in.i_max) p *= in.i_max / ir.max();
  return p;
}

inline Decision solve_baseline(const SpInstance& in, BaselineKind kind, double threshold = 0.5) {
  const Grouping gr = chs_grouping(in, threshold);
  Decision dec = hbf_zf(in, gr);
  dec.p = baseline_power(kind, dec.x, in);
  return dec;
}

}  // namespace nrucoex
