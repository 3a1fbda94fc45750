#include <gtest/gtest.h>

#include "nrucoex/pdd_solver.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nrucoex;
using testsupport::random_case;
using testsupport::small_scenario;

namespace {

/// Instance without WiGig transmitters or receivers.
SpInstance strip_wigig(SpInstance in) {
  for (auto& v : in.y) v.clear();
  in.coupling = RMat::Zero(0, in.num_users);
  in.zw = 0.0;
  return in;
}

/// Consistent state: binary grouping, W = F D, exact gains and SINRs.
PrimalState consistent_state(SpInstance& in) {
  in.rmin_active.assign(in.num_users, 0);
  in.gamma_max.setConstant(1e12);
  return cluster_initial_state(in, 0.5);
}

double max_abs(const RMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(AugmentedLagrangian, FeasibleStateWithZeroMultipliersEqualsObjective) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = random_case(seed, small_scenario(4));
    const PrimalState s = consistent_state(c.instance);
    const DualState d = DualState::zeros(2, 4, c.instance.num_tx(), 8, 0.5, 1.0);
    const double f = rate_objective(c.instance, s);
    EXPECT_NEAR(al_value(c.instance, s, d), f, 1e-10 * std::max(1.0, std::abs(f)));
    EXPECT_LT(residuals(c.instance, s).violation(), 1e-9);
  }
}

TEST(AugmentedLagrangian, CouplingPerturbationCostsQuadraticPenalty) {
  auto c = random_case(2, small_scenario(4));
  PrimalState s = consistent_state(c.instance);
  const double rho = 0.4, eps = 1e-3;
  const DualState d = DualState::zeros(2, 4, c.instance.num_tx(), 8, rho, 1.0);
  const double before = al_value(c.instance, s, d);
  // Moving d by eps / sqrt(M0) along a unit-modulus column shifts F d by eps in norm.
  s.d[0](0, 0) += eps / std::sqrt(8.0);
  const double after = al_value(c.instance, s, d);
  EXPECT_NEAR(before - after, eps * eps / (2.0 * rho), 1e-9 * eps * eps);
}

TEST(AugmentedLagrangian, MatchesTermByTermOracle) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto c = random_case(seed, small_scenario(3 + seed % 2));
    Rng rng = make_rng(seed, Stream::solver);
    const PrimalState s = testsupport::random_primal(rng, c.instance);
    const DualState d = testsupport::random_dual(rng, c.instance);
    const double lib = al_value(c.instance, s, d);
    const double ref = oracle::augmented_lagrangian(c.instance, s, d);
    ASSERT_LE(std::abs(lib - ref), 1e-10 * std::abs(ref)) << "seed " << seed;
  }
}

TEST(Cccp, TangentEqualsGainAtAnchor) {
  Rng rng = make_rng(3, Stream::solver);
  const CMat y = testsupport::random_cmat(rng, 6, 3);
  const CVec w = testsupport::random_cmat(rng, 6, 1);
  EXPECT_NEAR(tangent_gain(w, w, y), (y.adjoint() * w).squaredNorm(), 1e-12);
  const CVec other = testsupport::random_cmat(rng, 6, 1);
  EXPECT_LE(tangent_gain(w, other, y), (y.adjoint() * w).squaredNorm() + 1e-12);
}

TEST(Cccp, ZeroMultiplierKeepsOnlyTheTangent) {
  const auto c = random_case(4, small_scenario(3));
  Rng rng = make_rng(4, Stream::solver);
  PrimalState s = testsupport::random_primal(rng, c.instance);
  for (auto& m : s.mu) m.setOnes();
  s.xi.setOnes();
  const DualState d = DualState::zeros(2, 3, c.instance.num_tx(), 8, 0.5, 1.0);
  const CMat anchor = s.w + testsupport::random_cmat(rng, 8, 2, 0.1);
  const CccpTerms z = cccp_linearize(c.instance, s, d, anchor);
  for (int u = 0; u < 2; ++u)
    for (int k = 0; k < 3; ++k) {
      const double lin = tangent_gain(s.w.col(u), anchor.col(u), c.instance.h[0].col(k));
      for (int u2 = 0; u2 < 2; ++u2) EXPECT_NEAR(z.user[u](u2, k), lin, 1e-12 * std::max(1.0, std::abs(lin)));
    }
  EXPECT_THROW(cccp_linearize(c.instance, s, d, CMat::Zero(8, 3)), DimensionError);
}

TEST(Cccp, SurrogateIsTightMinorant) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = random_case(seed, small_scenario(3));
    Rng rng = make_rng(seed, Stream::solver);
    const PrimalState s = testsupport::random_primal(rng, c.instance);
    const DualState d = testsupport::random_dual(rng, c.instance);
    const double exact = oracle::augmented_lagrangian(c.instance, s, d);
    const CMat anchor = s.w + testsupport::random_cmat(rng, 8, 2, 0.5);
    const double tol = 1e-10 * std::max(1.0, std::abs(exact));
    EXPECT_LE(al_surrogate(c.instance, s, d, anchor), exact + tol);
    EXPECT_NEAR(al_surrogate(c.instance, s, d, s.w), exact, tol);
  }
}

TEST(SinrBlock, RootClosedForm) {
  const double rho = 0.3, weight = 7.0;
  const double q = rho * weight / kLn2;
  EXPECT_NEAR(sinr_root(weight, 1.0, 0.0, 0.0, rho), (std::sqrt(1.0 + 4.0 * q) - 1.0) / 2.0, 1e-12);
}

TEST(SinrBlock, RootMaximizesOneDimensionalObjective) {
  Rng rng = make_rng(5, Stream::solver);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double w = 1.0 + 20.0 * u(rng), lam = 1.0 + 5.0 * u(rng), mu = 10.0 * u(rng), lg = 2.0 * u(rng) - 1.0;
    const double rho = 0.05 + u(rng);
    auto phi = [&](double g) { return w * std::log2(1.0 + g) - std::pow(g * lam - mu + rho * lg, 2) / (2.0 * rho); };
    const double root = sinr_root(w, lam, mu, lg, rho);
    // Dense scan around the root.
    for (double g = std::max(0.0, root - 2.0); g < root + 2.0; g += 1e-3) ASSERT_LE(phi(g), phi(root) + 1e-9);
  }
}

TEST(SinrBlock, ClampsToBacklogCeiling) {
  auto c = random_case(6, small_scenario(2));
  c.instance.gamma_max << 0.05, 0.07;
  c.instance.rmin_active.assign(2, 0);
  Rng rng = make_rng(6, Stream::solver);
  PrimalState s = testsupport::random_primal(rng, c.instance);
  for (auto& m : s.mu) m *= 100.0;  // push the unconstrained roots high
  const DualState d = DualState::zeros(2, 2, c.instance.num_tx(), 8, 0.5, 1.0);
  solve_grouping_sinr(c.instance, s, d, cccp_linearize(c.instance, s, d, s.w));
  for (int u = 0; u < 2; ++u) {
    EXPECT_EQ(s.gamma(u, 0), 0.05);
    EXPECT_EQ(s.gamma(u, 1), 0.07);
  }
}

TEST(GroupingBlock, SingleBeamMatchesHandSolution) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto c = random_case(seed, small_scenario(2, 8, 1));
    c.instance.rmin_active.assign(2, 0);
    Rng rng = make_rng(seed, Stream::solver);
    PrimalState s = testsupport::random_primal(rng, c.instance);
    const DualState d = testsupport::random_dual(rng, c.instance, 0.3);
    const CccpTerms z = cccp_linearize(c.instance, s, d, s.w);
    const PrimalState before = s;
    solve_grouping_sinr(c.instance, s, d, z);
    const double rho = d.rho;
    for (int k = 0; k < 2; ++k) {
      const double g = oracle::vec_gain(s.w.col(0), c.instance.h[0].col(k));
      const double p = before.p(k), xt = before.xt(0, k);
      const double num = 1.0 - rho * d.lam_u(k) + xt - rho * d.lam_x(0, k) - (1.0 - xt) * rho * d.lam_xt(0, k) +
                         z.user[0](0, k) * p;
      const double den = 2.0 + (1.0 - xt) * (1.0 - xt) + g * g * p * p;
      EXPECT_NEAR(s.x(0, k), std::clamp(num / den, 0.0, 1.0), 1e-10);
    }
  }
}

TEST(PowerBlock, InteriorAndBoxSolutions) {
  auto c = random_case(7, small_scenario(1, 8, 1));
  SpInstance in = strip_wigig(c.instance);
  PrimalState s = consistent_state(in);
  s.x.setOnes();
  const DualState d = DualState::zeros(1, 1, 0, 8, 0.5, 1.0);
  const double g = beam_gains(in, s.w)(0, 0);
  // With zero multipliers and the anchor at W the stationary point is mu / g.
  s.mu[0](0, 0) = 4.0 * g;
  solve_power(in, s, d, cccp_linearize(in, s, d, s.w));
  EXPECT_NEAR(s.p(0), 4.0, 1e-9);
  s.mu[0](0, 0) = 50.0 * g;
  solve_power(in, s, d, cccp_linearize(in, s, d, s.w));
  EXPECT_NEAR(s.p(0), in.p_max, 1e-12);
  EXPECT_NEAR(in.p_max, 10.0, 1e-12);
  s.x.setZero();
  solve_power(in, s, d, cccp_linearize(in, s, d, s.w));
  EXPECT_EQ(s.p(0), 0.0);
}

TEST(PowerBlock, MatchesDenseQpWithReceiverCap) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto c = random_case(seed, small_scenario(3));
    Rng rng = make_rng(seed, Stream::solver);
    PrimalState s = testsupport::random_primal(rng, c.instance);
    s.x = testsupport::random_rmat(rng, 2, 3, 0.1, 1.0);
    const DualState d = testsupport::random_dual(rng, c.instance);
    c.instance.i_max = 0.3 * (c.instance.coupling * RVec::Constant(3, c.instance.p_max)).maxCoeff();
    const CMat anchor = s.w + testsupport::random_cmat(rng, 8, 2, 0.2);
    solve_power(c.instance, s, d, cccp_linearize(c.instance, s, d, anchor));
    const auto qp = oracle::power_qp(c.instance, s, d, anchor);
    const auto ref = oracle::enumerate_qp(qp.h, qp.c, qp.a, qp.b);
    ASSERT_TRUE(ref.found);
    EXPECT_LT((s.p - ref.z).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, ref.z.cwiseAbs().maxCoeff())) << seed;
  }
}

TEST(AnalogBlock, RankOnePhaseProjection) {
  Rng rng = make_rng(8, Stream::solver);
  const CVec w = testsupport::random_cmat(rng, 6, 1);
  CMat f = CMat::Ones(6, 1);
  const AnalogTrace tr = analog_bcu(f, CMat::Ones(1, 1), w, 1, 0.0);
  EXPECT_EQ(tr.sweeps, 1);
  for (int m = 0; m < 6; ++m) EXPECT_NEAR(std::abs(f(m, 0) - w(m) / std::abs(w(m))), 0.0, 1e-14);
}

TEST(AnalogBlock, MonotoneUnitModulusAndTermination) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng = make_rng(seed, Stream::solver);
    const CMat d = testsupport::random_cmat(rng, 3, 3);
    const CMat c = testsupport::random_cmat(rng, 12, 3);
    CMat f(12, 3);
    for (Eigen::Index e = 0; e < f.size(); ++e) f(e) = std::polar(1.0, 0.3 * e);
    const CMat dt = d * d.adjoint();
    const AnalogTrace tr = analog_bcu(f, dt, c, 25, 1e-9);
    for (std::size_t i = 1; i < tr.objective.size(); ++i)
      EXPECT_LE(tr.objective[i], tr.objective[i - 1] + 1e-9 * std::abs(tr.objective[i - 1]));
    EXPECT_LT((f.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_LE(tr.sweeps, 25);
    if (tr.sweeps < 25) {
      const double a = tr.objective[tr.objective.size() - 2], b = tr.objective.back();
      EXPECT_LE(std::abs(a - b), 1e-9 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST(DigitalBlock, QuadraticOnlyCaseIsClosedForm) {
  auto c = random_case(9, small_scenario(3));
  SpInstance in = strip_wigig(c.instance);
  Rng rng = make_rng(9, Stream::solver);
  PrimalState s = testsupport::random_primal(rng, in);
  s.p.setZero();
  s.xi = RMat::Zero(2, 0);
  const DualState d = testsupport::random_dual(rng, in);
  const CMat target = s.fd() - d.rho * d.lam_w;
  solve_digital_bf(in, s, d, EmbeddedChannels(in), s.w, 1e-12, 200);
  EXPECT_LT((s.w - target).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(DigitalBlock, LeastSquaresStageIsOptimalAndNormalized) {
  Rng rng = make_rng(10, Stream::solver);
  const CMat f = testsupport::random_cmat(rng, 8, 2);
  const CVec target = testsupport::random_cmat(rng, 8, 1);
  const CVec d = digital_ls(f, target);
  const double best = (target - f * d).norm();
  for (int i = 0; i < 100; ++i) {
    const CVec probe = d + testsupport::random_cmat(rng, 2, 1, 1e-3);
    ASSERT_GE((target - f * probe).norm(), best);
  }
  const CVec n = normalize_combiner(f, d);
  EXPECT_NEAR((f * n).norm(), std::sqrt(8.0), 1e-12);
  EXPECT_NEAR(std::abs(n.dot(d)) / (n.norm() * d.norm()), 1.0, 1e-12);
}

TEST(DigitalBlock, AnalyticGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = random_case(seed, small_scenario(3));
    Rng rng = make_rng(seed, Stream::solver);
    const PrimalState s = testsupport::random_primal(rng, c.instance);
    const DualState d = testsupport::random_dual(rng, c.instance);
    const EmbeddedChannels emb(c.instance);
    const CMat anchor = s.w + testsupport::random_cmat(rng, 8, 2, 0.2);
    for (int u = 0; u < 2; ++u) {
      const BeamProblem bp = beam_problem(c.instance, s, d, emb, anchor, u);
      const RVec z = to_real(s.w.col(u));
      const RVec grad = bp.gradient(z);
      RVec fd(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(z(i)));
        RVec zp = z, zm = z;
        zp(i) += h;
        zm(i) -= h;
        fd(i) = (oracle::beam_objective(c.instance, s, d, anchor, u, to_complex(zp)) -
                 oracle::beam_objective(c.instance, s, d, anchor, u, to_complex(zm))) /
                (2.0 * h);
      }
      EXPECT_LT((grad - fd).norm() / fd.norm(), 1e-5);
    }
  }
}

TEST(AuxBlock, GroupingCopyClosedForm) {
  auto c = random_case(11, small_scenario(2));
  Rng rng = make_rng(11, Stream::solver);
  PrimalState s = testsupport::random_primal(rng, c.instance);
  DualState d = DualState::zeros(2, 2, c.instance.num_tx(), 8, 0.5, 1.0);
  s.x << 0.0, 1.0, 0.0, 1.0;
  solve_aux(c.instance, s, d);
  EXPECT_EQ(s.xt(0, 0), 0.0);
  EXPECT_EQ(s.xt(0, 1), 1.0);
  d = testsupport::random_dual(rng, c.instance);
  s.x = testsupport::random_rmat(rng, 2, 2, 0.0, 1.0);
  solve_aux(c.instance, s, d);
  for (int u = 0; u < 2; ++u)
    for (int k = 0; k < 2; ++k) {
      const double x = s.x(u, k);
      // Stationarity of (x - xt + rho lx)^2 + (x (1 - xt) + rho lxt)^2 in xt.
      const double raw = (x + d.rho * d.lam_x(u, k) + x * x + d.rho * x * d.lam_xt(u, k)) / (1.0 + x * x);
      EXPECT_NEAR(s.xt(u, k), std::clamp(raw, 0.0, 1.0), 1e-12);
    }
}

TEST(AuxBlock, GainsMatchDenseQp) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto c = random_case(seed, small_scenario(3));
    Rng rng = make_rng(seed, Stream::solver);
    PrimalState s = testsupport::random_primal(rng, c.instance);
    const DualState d = testsupport::random_dual(rng, c.instance);
    solve_aux(c.instance, s, d);
    for (int u = 0; u < 2; ++u) {
      const auto qp = oracle::aux_qp(c.instance, s, d, u);
      const auto ref = oracle::enumerate_qp(qp.h, qp.c, qp.a, qp.b);
      ASSERT_TRUE(ref.found);
      RVec lib(ref.z.size());
      for (int u2 = 0; u2 < 2; ++u2)
        for (int k = 0; k < 3; ++k) lib(u2 * 3 + k) = s.mu[u](u2, k);
      for (int j = 0; j < c.instance.num_tx(); ++j) lib(6 + j) = s.xi(u, j);
      EXPECT_LT((lib - ref.z).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, ref.z.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Blocks, EachExactBlockRaisesTheLagrangian) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto c = random_case(seed, small_scenario(3));
    SpInstance& in = c.instance;
    in.rmin_active.assign(3, 0);
    Rng rng = make_rng(seed, Stream::solver);
    PrimalState s = testsupport::random_primal(rng, in);
    const DualState d = testsupport::random_dual(rng, in, 0.2);
    const EmbeddedChannels emb(in);
    auto al = [&] { return al_value(in, s, d); };
    auto tol = [&](double v) { return 1e-9 * std::max(1.0, std::abs(v)); };
    const CMat anchor = s.w;
    const CccpTerms z = cccp_linearize(in, s, d, anchor);
    double prev = al();
    solve_grouping_sinr(in, s, d, z);
    EXPECT_GE(al(), prev - tol(prev)) << "grouping, seed " << seed;
    prev = al();
    solve_power(in, s, d, z);
    EXPECT_GE(al(), prev - tol(prev)) << "power, seed " << seed;
    prev = al();
    solve_analog_bf(in, s, d, 10, 1e-12);
    EXPECT_GE(al(), prev - tol(prev)) << "analog, seed " << seed;
    prev = al();
    const std::vector<CMat> d_before = s.d;
    solve_digital_bf(in, s, d, emb, anchor, 1e-9, 200);
    std::swap(s.d, const_cast<std::vector<CMat>&>(d_before));
    EXPECT_GE(al(), prev - tol(prev)) << "combiner, seed " << seed;
    std::swap(s.d, const_cast<std::vector<CMat>&>(d_before));
    prev = al();
    solve_aux(in, s, d);
    EXPECT_GE(al(), prev - tol(prev)) << "aux, seed " << seed;
  }
}

TEST(OuterLoop, ConvergedStateLeavesMultipliers) {
  auto c = random_case(12, small_scenario(3));
  const PrimalState s = consistent_state(c.instance);
  DualState d = DualState::zeros(2, 3, c.instance.num_tx(), 8, 0.5, 1.0);
  const double h = outer_update(c.instance, s, d, 0.7);
  EXPECT_LT(h, 1e-9);
  EXPECT_LT(max_abs(d.lam_gamma), 1e-9);
  EXPECT_EQ(d.lam_u.norm(), 0.0);
  EXPECT_EQ(d.rho, 0.5);
}

TEST(OuterLoop, ViolationIsLargestResidual) {
  auto c = random_case(13, small_scenario(3));
  PrimalState s = consistent_state(c.instance);
  s.xt(1, 2) = s.x(1, 2) - 0.3;  // copy residual 0.3; binary residual x (1 - xt) <= 0.3
  DualState d = DualState::zeros(2, 3, c.instance.num_tx(), 8, 0.5, 1.0);
  EXPECT_NEAR(outer_update(c.instance, s, d, 0.7), 0.3, 1e-12);
  EXPECT_NEAR(d.delta, 0.27, 1e-12);
}

TEST(OuterLoop, PenaltyShrinksGeometrically) {
  auto c = random_case(14, small_scenario(3));
  PrimalState s = consistent_state(c.instance);
  s.xt(0, 0) = s.x(0, 0) + 0.5;
  DualState d = DualState::zeros(2, 3, c.instance.num_tx(), 8, 0.5, 0.1);
  for (int l = 0; l < 12; ++l) outer_update(c.instance, s, d, 0.7);
  EXPECT_NEAR(d.rho, 0.5 * std::pow(0.7, 12), 1e-15);
  EXPECT_EQ(d.lam_x.norm(), 0.0);
}

TEST(Rounding, ArgmaxWithLowestBeamOnTies) {
  RMat x(3, 3);
  x << 0.2, 0.4, 0.1,  //
      0.7, 0.4, 0.1,   //
      0.1, 0.2, 0.1;
  RMat expected(3, 3);
  expected << 0, 1, 1, 1, 0, 0, 0, 0, 0;
  EXPECT_EQ(round_grouping(x), expected);
}

TEST(Stall, DetectsFlatViolation) {
  std::vector<double> h(40, 0.5);
  EXPECT_TRUE(violation_stalled(h, 0));
  EXPECT_FALSE(violation_stalled(h, 10));
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::pow(0.8, static_cast<double>(i));
  EXPECT_FALSE(violation_stalled(h, 0));
}

TEST(MinimumRate, UnreachableRequirementIsRelaxedUpFront) {
  auto c = random_case(15, small_scenario(3));
  c.instance.gamma_min = 1e9;
  c.instance.backlog.setConstant(1.0);
  c.instance.gamma_max.setConstant(1e12);
  const auto dropped = relax_infeasible_rmin(c.instance);
  EXPECT_EQ(dropped.size(), 3u);
  for (char a : c.instance.rmin_active) EXPECT_EQ(a, 0);
}

TEST(SolveSp, SingleUserMatchesPowerGrid) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = random_case(seed, small_scenario(1, 8, 1));
    SpInstance in = strip_wigig(c.instance);
    in.backlog.setConstant(100.0);
    in.gamma_max.setConstant(1e6);
    Rng rng = make_rng(seed, Stream::solver);
    const SolveResult r = solve_sp(in, SolverSettings{}, rng);
    EXPECT_EQ(r.decision.x(0, 0), 1.0);
    const double pdd = oracle::sp_objective(in, r.decision.x, r.decision.p, r.decision.beams());
    // Grid over p with the phase-matched analog column, the best single-chain hybrid combiner.
    CMat w(8, 1);
    for (int m = 0; m < 8; ++m) w(m, 0) = std::polar(1.0, std::arg(in.h[0](m, 0)));
    double best = -1e300;
    for (int i = 0; i <= 1000; ++i)
      best = std::max(best, oracle::sp_objective(in, RMat::Ones(1, 1), RVec::Constant(1, in.p_max * i / 1000.0), w));
    EXPECT_GE(pdd, 0.99 * best) << "seed " << seed;
    EXPECT_GT(r.decision.p(0), 0.9 * in.p_max);
  }
}

TEST(SolveSp, OutputIsFeasibleAndResidualsSmallOnConvergence) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto c = random_case(seed, small_scenario(4));
    Rng rng = make_rng(seed, Stream::solver);
    const SolveResult r = solve_sp(c.instance, SolverSettings{}, rng);
    const Decision& dec = r.decision;
    EXPECT_LE(wigig_interference(c.instance, dec.x, dec.p).max(), c.instance.i_max + 1e-6);
    for (int k = 0; k < 4; ++k) {
      EXPECT_EQ(dec.x.col(k).sum(), 1.0);
      EXPECT_GE(dec.p(k), 0.0);
      EXPECT_LE(dec.p(k), c.instance.p_max);
    }
    for (const auto& f : dec.f) EXPECT_LT((f.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_FALSE(r.report.h_trace.empty());
    EXPECT_FALSE(r.report.trace.empty());
    if (r.report.converged) {
      const Residuals res = residuals(c.instance, r.state);
      EXPECT_LT(res.violation(), 1e-3);
      EXPECT_LT(max_abs(res.sum_x.transpose()), 1e-3);
      EXPECT_LT(max_abs(res.sinr), 1e-3);
    }
    EXPECT_NEAR(r.objective, sp_objective(c.instance, dec), 1e-12 * std::max(1.0, std::abs(r.objective)));
  }
}
