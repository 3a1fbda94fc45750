#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "nrucoex/scenario.hpp"
#include "nrucoex/types.hpp"

namespace nrucoex {

using Rng = std::mt19937_64;

/// Independent RNG streams derived from one seed.
enum class Stream : std::uint64_t { channels = 0, traffic = 1, solver = 2 };

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

/// ULA response with half-wavelength spacing, unit Euclidean norm.
inline CVec steering(double psi, int m) {
  if (m < 1) throw DimensionError("steering: antenna count must be >= 1");
  CVec a(m);
  const double c = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < m; ++i) a(i) = c * std::polar(1.0, kPi * i * psi);
  return a;
}

struct Position {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Log-distance path loss; distances below the reference are clamped to it.
struct PathLossModel {
  double pl0_db = 68.0;
  double d0_m = 1.0;
  double exp_los = 2.0;
  double exp_nlos = 3.0;
  double nlos_extra_db = 10.0;

  double los_db(double d) const { return pl0_db + 10.0 * exp_los * std::log10(std::max(d, d0_m) / d0_m); }
  double nlos_db(double d) const {
    return pl0_db + 10.0 * exp_nlos * std::log10(std::max(d, d0_m) / d0_m) + nlos_extra_db;
  }
  double los_power(double d) const { return db_to_lin(-los_db(d)); }
  double nlos_power(double d) const { return db_to_lin(-nlos_db(d)); }
  /// E[|beta|^2] summed over all paths.
  double mean_gain(double d, int nlos_paths) const { return los_power(d) + nlos_paths * nlos_power(d); }

  static PathLossModel from(const Scenario& s) {
    return {s.pl0_db, s.pl_d0_m, s.pl_exp_los, s.pl_exp_nlos, s.nlos_extra_db};
  }
};

namespace detail {

inline double draw_spatial(Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  return std::sin(angle(rng));
}

inline cplx draw_cn(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

}  // namespace detail

/// Saleh-Valenzuela channel from an m_tx-element transmitter to an m_rx-element
/// receiver: one LoS path plus `nlos_paths` scattered paths.
inline CMat draw_sv_channel(Rng& rng, const Position& tx, const Position& rx, int m_rx, int m_tx,
                            int nlos_paths, const PathLossModel& pl) {
  if (m_rx < 1 || m_tx < 1) throw DimensionError("draw_sv_channel: antenna counts must be >= 1");
  if (nlos_paths < 0) throw DimensionError("draw_sv_channel: nlos_paths must be >= 0");
  const double d = distance(tx, rx);
  if (!(d > 0.0)) throw std::invalid_argument("draw_sv_channel: TX and RX positions coincide");

  CMat h = CMat::Zero(m_rx, m_tx);
  auto add_path = [&](cplx beta) {
    const CVec ar = steering(detail::draw_spatial(rng), m_rx);
    const CVec at = steering(detail::draw_spatial(rng), m_tx);
    h.noalias() += beta * ar * at.adjoint();
  };
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  add_path(std::polar(std::sqrt(pl.los_power(d)), phase(rng)));
  for (int l = 0; l < nlos_paths; ++l) add_path(detail::draw_cn(rng, pl.nlos_power(d)));
  return h;
}

/// Vector channel from a single-antenna transmitter to an m-element array.
inline CVec draw_sv_vector(Rng& rng, const Position& tx, const Position& rx, int m, int nlos_paths,
                           const PathLossModel& pl) {
  return draw_sv_channel(rng, tx, rx, m, 1, nlos_paths, pl).col(0);
}

/// Device positions for one realization.
struct Geometry {
  std::vector<Position> nr_aps;
  std::vector<Position> nr_users;
  std::vector<Position> wigig_aps;
  std::vector<Position> wigig_users;  // grouped by serving AP
  std::vector<int> wigig_user_ap;
};

inline Geometry draw_geometry(Rng& rng, const Scenario& s) {
  Geometry g;
  const double a = s.area_m;
  std::uniform_real_distribution<double> coord(0.0, a);
  for (int i = 0; i < s.num_nr_aps; ++i)
    g.nr_aps.push_back({(i + 0.5) * a / s.num_nr_aps, 0.75 * a});
  for (int j = 0; j < s.num_wigig_aps; ++j)
    g.wigig_aps.push_back({(j + 0.5) * a / s.num_wigig_aps, 0.25 * a});
  for (int k = 0; k < s.num_users; ++k) {
    const double x = coord(rng);
    const double y = coord(rng);
    g.nr_users.push_back({x, y});
  }
  for (int j = 0; j < s.num_wigig_aps; ++j)
    for (int q = 0; q < s.wigig_users_per_ap; ++q) {
      const double x = coord(rng);
      const double y = coord(rng);
      g.wigig_users.push_back({x, y});
      g.wigig_user_ap.push_back(j);
    }
  return g;
}

/// All propagation channels of one realization (linear amplitude, mW scale).
struct ChannelSet {
  std::vector<std::vector<CVec>> h;   // [nr_ap][user], length M0
  std::vector<std::vector<CMat>> gc;  // [nr_ap][wigig_ap], M0 x M^A
  std::vector<std::vector<CVec>> gw;  // [wigig_user][user], length M^U
  std::vector<CMat> hw;               // [wigig_user], M^U x M^A from its serving AP
};

inline ChannelSet draw_channels(Rng& rng, const Scenario& s, const Geometry& g) {
  const PathLossModel pl = PathLossModel::from(s);
  ChannelSet c;
  c.h.resize(s.num_nr_aps);
  for (int i = 0; i < s.num_nr_aps; ++i)
    for (int k = 0; k < s.num_users; ++k)
      c.h[i].push_back(draw_sv_vector(rng, g.nr_users[k], g.nr_aps[i], s.nr_antennas, s.nlos_paths, pl));
  c.gc.resize(s.num_nr_aps);
  for (int i = 0; i < s.num_nr_aps; ++i)
    for (int j = 0; j < s.num_wigig_aps; ++j)
      c.gc[i].push_back(draw_sv_channel(rng, g.wigig_aps[j], g.nr_aps[i], s.nr_antennas,
                                        s.wigig_ap_antennas, s.nlos_paths, pl));
  const int nw = static_cast<int>(g.wigig_users.size());
  c.gw.resize(nw);
  for (int q = 0; q < nw; ++q)
    for (int k = 0; k < s.num_users; ++k)
      c.gw[q].push_back(
          draw_sv_vector(rng, g.nr_users[k], g.wigig_users[q], s.wigig_user_antennas, s.nlos_paths, pl));
  for (int q = 0; q < nw; ++q)
    c.hw.push_back(draw_sv_channel(rng, g.wigig_aps[g.wigig_user_ap[q]], g.wigig_users[q],
                                   s.wigig_user_antennas, s.wigig_ap_antennas, s.nlos_paths, pl));
  return c;
}

/// Oversampled DFT codebook: 2m unit-norm beams covering psi in [-1, 1).
inline std::vector<CVec> dft_codebook(int m) {
  std::vector<CVec> book;
  const int n = 2 * m;
  for (int i = 0; i < n; ++i) book.push_back(steering(-1.0 + 2.0 * i / n, m));
  return book;
}

struct WiGigGroup {
  std::vector<int> users;    // global WiGig user indices
  std::vector<int> sectors;  // AP-side codebook index per member
  CMat v_rf;                 // M^A x N^A, unit-modulus columns, zero padded
  CMat v_bb;                 // N^A x N^A, zero padded
  CMat v_a;                  // M^A x N^A hybrid product, unit Frobenius norm
};

/// Outcome of the sector sweep, grouping and ZF design for one beacon interval.
struct WiGigState {
  std::vector<std::vector<WiGigGroup>> groups;  // [wigig_ap][group]
  std::vector<CVec> v_user;                     // receive beam per WiGig user (unit norm)
  std::vector<double> p_w;                      // transmit power per AP, mW
  int num_sps = 0;

  int num_aps() const { return static_cast<int>(groups.size()); }
  int group_at(int ap, int t) const { return t % static_cast<int>(groups[ap].size()); }
  const CMat& v_a(int ap, int t) const { return groups[ap][group_at(ap, t)].v_a; }

  /// Transmitting WiGig APs in SP t.
  std::vector<int> tx_sched(int t) const {
    std::vector<int> tx(groups.size());
    std::iota(tx.begin(), tx.end(), 0);
    (void)t;
    return tx;
  }
  /// Receiving WiGig users in SP t.
  std::vector<int> rx_sched(int t) const {
    std::vector<int> rx;
    for (int a = 0; a < num_aps(); ++a)
      for (int q : groups[a][group_at(a, t)].users) rx.push_back(q);
    return rx;
  }
};

namespace detail {

inline double beam_correlation(const CVec& a, const CVec& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

/// ZF digital stage for a group; returns the hybrid product with equal power
/// per stream and unit total Frobenius norm.
inline void design_group(WiGigGroup& g, const ChannelSet& ch, const std::vector<CVec>& v_user,
                         const std::vector<CVec>& book, int m_a, int n_a) {
  const int n = static_cast<int>(g.users.size());
  g.v_rf = CMat::Zero(m_a, n_a);
  for (int s = 0; s < n; ++s) g.v_rf.col(s) = book[g.sectors[s]] * std::sqrt(static_cast<double>(m_a));
  CMat heff(n, n);
  for (int r = 0; r < n; ++r)
    heff.row(r) = v_user[g.users[r]].adjoint() * ch.hw[g.users[r]] * g.v_rf.leftCols(n);
  CMat bb = heff.completeOrthogonalDecomposition().pseudoInverse();
  CMat prod = g.v_rf.leftCols(n) * bb;
  for (int s = 0; s < n; ++s) {
    const double nrm = prod.col(s).norm();
    const double scale = nrm > 0.0 ? 1.0 / (nrm * std::sqrt(static_cast<double>(n))) : 0.0;
    bb.col(s) *= scale;
    prod.col(s) *= scale;
  }
  g.v_bb = CMat::Zero(n_a, n_a);
  g.v_bb.topLeftCorner(n, n) = bb;
  g.v_a = CMat::Zero(m_a, n_a);
  g.v_a.leftCols(n) = prod;
}

}  // namespace detail

/// Sector sweep, semi-orthogonal grouping and ZF digital design for every WiGig AP.
inline WiGigState build_wigig_state(const Scenario& s, const ChannelSet& ch, int num_sps) {
  const int m_a = s.wigig_ap_antennas;
  const int n_a = s.wigig_ap_rf_chains;
  const int per_ap = s.wigig_users_per_ap;
  const auto ap_book = dft_codebook(m_a);
  const auto user_book = dft_codebook(s.wigig_user_antennas);
  const int n_sectors = static_cast<int>(ap_book.size());
  if (per_ap > n_sectors)
    throw InfeasibleError("WiGig grouping infeasible: " + std::to_string(per_ap) +
                          " users per AP exceed " + std::to_string(n_sectors) + " sectors");

  WiGigState st;
  st.num_sps = num_sps;
  st.p_w.assign(s.num_wigig_aps, s.p_wigig_mw());
  const int nw = s.num_wigig_aps * per_ap;
  st.v_user.resize(nw);

  // Per user: AP sector gains (best user beam for each sector).
  std::vector<std::vector<double>> sector_gain(nw, std::vector<double>(n_sectors));
  std::vector<std::vector<int>> sector_user_beam(nw, std::vector<int>(n_sectors));
  for (int q = 0; q < nw; ++q)
    for (int c = 0; c < n_sectors; ++c) {
      const CVec rx = ch.hw[q] * ap_book[c];
      double best = -1.0;
      int best_b = 0;
      for (int b = 0; b < static_cast<int>(user_book.size()); ++b) {
        const double gain = std::norm(user_book[b].dot(rx));
        if (gain > best) best = gain, best_b = b;
      }
      sector_gain[q][c] = best;
      sector_user_beam[q][c] = best_b;
    }

  st.groups.resize(s.num_wigig_aps);
  for (int a = 0; a < s.num_wigig_aps; ++a) {
    std::vector<int> users(per_ap);
    std::iota(users.begin(), users.end(), a * per_ap);
    std::vector<std::vector<int>> order(nw);
    for (int q : users) {
      order[q].resize(n_sectors);
      std::iota(order[q].begin(), order[q].end(), 0);
      std::stable_sort(order[q].begin(), order[q].end(),
                       [&](int x, int y) { return sector_gain[q][x] > sector_gain[q][y]; });
    }
    std::stable_sort(users.begin(), users.end(), [&](int x, int y) {
      return sector_gain[x][order[x][0]] > sector_gain[y][order[y][0]];
    });

    auto& groups = st.groups[a];
    groups.resize((per_ap + n_a - 1) / n_a);
    auto compatible = [&](const WiGigGroup& g, int sector) {
      if (static_cast<int>(g.users.size()) >= n_a) return false;
      for (int other : g.sectors)
        if (other == sector ||
            detail::beam_correlation(ap_book[other], ap_book[sector]) >= s.semi_orth_threshold)
          return false;
      return true;
    };
    for (int q : users) {
      const double best = sector_gain[q][order[q][0]];
      bool placed = false;
      // Near-best sectors first, then any sector, before opening an extra group.
      for (int pass = 0; pass < 2 && !placed; ++pass)
        for (int c : order[q]) {
          if (pass == 0 && sector_gain[q][c] < 0.25 * best) break;
          for (auto& g : groups)
            if (compatible(g, c)) {
              g.users.push_back(q);
              g.sectors.push_back(c);
              placed = true;
              break;
            }
          if (placed) break;
        }
      if (!placed) {
        groups.emplace_back();
        groups.back().users.push_back(q);
        groups.back().sectors.push_back(order[q][0]);
      }
    }
    groups.erase(std::remove_if(groups.begin(), groups.end(),
                                [](const WiGigGroup& g) { return g.users.empty(); }),
                 groups.end());
    for (auto& g : groups) {
      for (std::size_t r = 0; r < g.users.size(); ++r) {
        const int q = g.users[r];
        st.v_user[q] = user_book[sector_user_beam[q][g.sectors[r]]];
      }
      detail::design_group(g, ch, st.v_user, ap_book, m_a, n_a);
    }
  }
  return st;
}

/// Effective WiGig-to-NR channel after WiGig hybrid beamforming: M0 x N^A.
inline CMat effective_wigig_channel(const ChannelSet& ch, const WiGigState& w, int nr_ap, int wigig_ap,
                                    int t) {
  return ch.gc[nr_ap][wigig_ap] * w.v_a(wigig_ap, t);
}

/// One channel realization plus the WiGig configuration built on it.
struct Environment {
  Geometry geometry;
  ChannelSet channels;
  WiGigState wigig;
};

inline Environment draw_environment(const Scenario& s, Rng& rng) {
  Environment env;
  env.geometry = draw_geometry(rng, s);
  env.channels = draw_channels(rng, s, env.geometry);
  env.wigig = build_wigig_state(s, env.channels, s.num_sps);
  return env;
}

}  // namespace nrucoex
