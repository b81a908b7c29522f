#include "gtgda/analysis.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gtgda;

namespace {

SaddleProblem<double> seed7_quadratic() { return make_quadratic<double>(3, 3, 4, 1.0, 7); }

ProblemConstants<double> unit_constants() {
  ProblemConstants<double> c;
  c.L1 = c.L2 = c.L = 1;
  c.mu = c.sigma_M = c.sigma_m = c.kappa = c.gamma = 1;
  return c;
}

double frob(const Matrixd& m) { return m.norm(); }

}  // namespace

// --------------------------------------------------------- error vector

TEST(ErrorVector, ZeroAtSaddleWithExactTracking) {
  auto p = seed7_quadratic();
  auto s = init_state(p, 1);
  for (Index i = 0; i < p.n(); ++i) {
    s.x.row(i) = p.x_star.transpose();
    s.y.row(i) = p.y_star.transpose();
  }
  s.q.setZero();
  s.w.setZero();
  auto u = error_vector(s, p, 2.0);
  EXPECT_LE(u.maxCoeff(), 1e-13);
  EXPECT_GE(u.minCoeff(), 0.0);
}

TEST(ErrorVector, SingleNodeConsensusEntriesVanish) {
  auto p = make_quadratic<double>(3, 3, 1, 1.0, 7);
  auto u = error_vector(init_state(p, 4), p, 1.0);
  EXPECT_EQ(u(0), 0.0);
  EXPECT_EQ(u(2), 0.0);
  EXPECT_EQ(u(3), 0.0);
  EXPECT_EQ(u(5), 0.0);
}

TEST(ErrorVector, MatchesStraightLineNorms) {
  auto p = seed7_quadratic();
  auto s = init_state(p, 8);
  const double L = 3.5;
  const Index n = p.n();
  Vectord xb = Vectord::Zero(3), yb = Vectord::Zero(3), qb = Vectord::Zero(3), wb = Vectord::Zero(3);
  for (Index i = 0; i < n; ++i) {
    xb += s.x.row(i).transpose() / double(n);
    yb += s.y.row(i).transpose() / double(n);
    qb += s.q.row(i).transpose() / double(n);
    wb += s.w.row(i).transpose() / double(n);
  }
  double ex = 0, eq = 0, ey = 0, ew = 0;
  for (Index i = 0; i < n; ++i) {
    ex += (s.x.row(i).transpose() - xb).squaredNorm();
    eq += (s.q.row(i).transpose() - qb).squaredNorm();
    ey += (s.y.row(i).transpose() - yb).squaredNorm();
    ew += (s.w.row(i).transpose() - wb).squaredNorm();
  }
  // ∇H*(z) solves (R̄ + R̄ᵀ) y = z − r̄.
  const Vectord ystar_of_x = (p.R_sym).fullPivLu().solve(p.P_bar * xb - p.r_bar);
  auto u = error_vector(s, p, L);
  EXPECT_NEAR(u(0), std::sqrt(ex), 1e-12);
  EXPECT_NEAR(u(1), std::sqrt(double(n)) * (xb - p.x_star).norm(), 1e-12);
  EXPECT_NEAR(u(2), std::sqrt(eq) / L, 1e-12);
  EXPECT_NEAR(u(3), std::sqrt(ey), 1e-12);
  EXPECT_NEAR(u(4), std::sqrt(double(n)) * (yb - ystar_of_x).norm(), 1e-12);
  EXPECT_NEAR(u(5), std::sqrt(ew) / L, 1e-12);
}

// ------------------------------------------------------ system matrix M

TEST(SystemMatrix, ZeroStepsizes) {
  auto c = aggregate_constants(seed7_quadratic());
  const double lam = 0.6;
  auto M = build_M(c, lam, 0.0, 0.0, certified_c(c));
  Matrixd m11(3, 3);
  m11 << lam, 0, 0, 0, 1, 0, lam, 0, lam;
  EXPECT_EQ(Matrixd(M.block(0, 0, 3, 3)), m11);
  EXPECT_EQ(Matrixd(M.block(3, 3, 3, 3)), m11);
  EXPECT_NEAR(spectral_radius(M), 1.0, 1e-14);
  EXPECT_GE(M.minCoeff(), 0.0);
}

TEST(SystemMatrix, UnitConstantsDiagonal) {
  auto c = unit_constants();
  const double t = 0.01, cc = 6;
  auto M = build_M(c, 0.0, t, t, cc);
  EXPECT_DOUBLE_EQ(M(1, 1), 1 - t);
  EXPECT_DOUBLE_EQ(M(4, 4), 1 - t * (1 - 1 / cc));
}

TEST(SystemMatrix, RejectsSmallC) {
  auto c = unit_constants();
  EXPECT_THROW(build_M(c, 0.0, 0.01, 0.01, 5.0), InvalidParameter);
  EXPECT_THROW(build_M(c, 0.0, -0.01, 0.01, 6.0), InvalidParameter);
}

TEST(SystemMatrix, Seed7CertifiedOnCompleteGraph) {
  // λ = 0 (complete graph): the λ-rows of the certificate collapse.
  auto c = aggregate_constants(seed7_quadratic());
  auto st = theorem1_stepsizes(c, 0.0, 1.0);
  auto M = build_M(c, 0.0, st.alpha, st.beta, st.c);
  const double rho = spectral_radius(M);
  EXPECT_LT(rho, 1.0);
  EXPECT_NEAR(rho, oracle::spectral_radius_complex(M), 1e-12);
  const double eta = predicted_eta(c, st.alpha, st.beta);
  auto cert = verify_lemma2(M, build_delta(c, 0.0, st.c), eta);
  EXPECT_TRUE(cert.holds);
  EXPECT_GE(cert.slack.minCoeff(), -kCertificateTolerance);
  EXPECT_LE(rho, eta);
}

TEST(SystemMatrix, Seed7ExponentialCertificateFailsOnTrackingRows) {
  // Regression record: with λ > 0 the simplified stepsize bound does not
  // certify this ill-conditioned coupling; rows 3 and 6 break.
  auto p = seed7_quadratic();
  auto c = aggregate_constants(p);
  auto W = make_weights(build_topology(TopologyKind::exponential, 4));
  auto st = theorem1_stepsizes(c, W.lambda, 1.0);
  auto M = build_M(c, W.lambda, st.alpha, st.beta, st.c);
  auto cert = verify_lemma2(M, build_delta(c, W.lambda, st.c), predicted_eta(c, st.alpha, st.beta));
  EXPECT_FALSE(cert.holds);
  EXPECT_LT(cert.slack(2), 0.0);
  EXPECT_LT(cert.slack(5), 0.0);
  EXPECT_GE(cert.slack(0), 0.0);
  EXPECT_GE(cert.slack(3), 0.0);
}

TEST(SystemMatrix, LargeStepsizesBreakCertificate) {
  auto c = aggregate_constants(seed7_quadratic());
  auto st = theorem1_stepsizes(c, 0.0, 1.0);
  const double a = 100 * st.alpha, b = 100 * st.beta;
  auto M = build_M(c, 0.0, a, b, st.c);
  auto cert = verify_lemma2(M, build_delta(c, 0.0, st.c), predicted_eta(c, a, b));
  EXPECT_FALSE(cert.holds);
}

TEST(SystemMatrix, ZeroStepsizesCertifyWithUnitEta) {
  auto c = aggregate_constants(seed7_quadratic());
  const double cc = certified_c(c);
  for (double lam : {0.0, 0.5, 0.9}) {
    auto M = build_M(c, lam, 0.0, 0.0, cc);
    EXPECT_TRUE(verify_lemma2(M, build_delta(c, lam, cc), 1.0).holds);
  }
}

// ---------------------------------------------------------------- delta

TEST(Delta, UnitConstantsHandValues) {
  // l1 = 2, l3 = 1/5, d = 1 − 2·2·(1/5) = 1/5, l2 = 5.
  auto d = build_delta(unit_constants(), 0.5, 6.0);
  EXPECT_NEAR(d(0), 1.0, 1e-15);
  EXPECT_NEAR(d(1), 24.0, 1e-13);
  EXPECT_NEAR(d(2), 2.0, 1e-15);
  EXPECT_NEAR(d(3), 5.0 / 14.0, 1e-15);
  EXPECT_NEAR(d(4), 20.6, 1e-13);
  EXPECT_NEAR(d(5), 2.0, 1e-15);
}

TEST(Delta, PositiveForValidConstants) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto c = aggregate_constants(make_quadratic<double>(3, 4, 5, 1.0, seed));
    for (double lam : {0.1, 0.5, 0.95}) {
      auto d = build_delta(c, lam, certified_c(c));
      EXPECT_GT(d.minCoeff(), 0.0);
    }
  }
}

// ------------------------------------------------------------------ eta

TEST(Eta, Values) {
  auto c = unit_constants();
  EXPECT_DOUBLE_EQ(predicted_eta(c, 0.5, 0.5), 0.75);
  EXPECT_NEAR(predicted_eta(c, 1e-12, 0.5), 1.0, 1e-12);
  EXPECT_THROW(predicted_eta(c, 2.0, 2.0), InvalidParameter);
  EXPECT_THROW(predicted_eta(c, 0.0, 2.0), InvalidParameter);
}

// -------------------------------------------------------------------- N

TEST(PerturbationMatrix, Structure) {
  auto c = aggregate_constants(seed7_quadratic());
  auto N = build_N(c, 0.5, 0.1, 0.2, 3, false);
  const double tk = std::pow(0.5, 3) * c.tau;
  EXPECT_DOUBLE_EQ(N(1, 0), 0.1 * tk);
  EXPECT_DOUBLE_EQ(N(0, 4), 0.2 * tk);
  EXPECT_EQ((N.array() != 0).count(), 2);
  EXPECT_LT(build_N(c, 0.5, 0.1, 0.2, 200, false).norm(), 1e-50);
  EXPECT_EQ(build_N(c, 0.5, 0.1, 0.2, 0, true), build_N(c, 0.5, 0.1, 0.2, 500, true));
  auto c0 = aggregate_constants(make_quadratic<double>(3, 3, 4, 0.0, 7));
  EXPECT_EQ(build_N(c0, 0.5, 0.1, 0.2, 0, true).norm(), 0.0);
  auto Nd = build_N(c, 0.5, 0.1, 0.2, 0, true, NPlacement::by_derivation);
  EXPECT_DOUBLE_EQ(Nd(1, 1), 0.1 * c.tau);
  EXPECT_DOUBLE_EQ(Nd(4, 0), 0.2 * c.tau);
}

TEST(PerturbationMatrix, MonitorHoldsOnCertifiedRun) {
  auto p = seed7_quadratic();
  auto c = aggregate_constants(p);
  auto W = make_weights(build_topology(TopologyKind::complete, 4));
  auto st = theorem1_stepsizes(c, W.lambda, 1.0);
  auto M = build_M(c, W.lambda, st.alpha, st.beta, st.c);
  auto s = init_state(p, 2);
  SolverConfig cfg{Variant::gt_gda, st.alpha, st.beta, 1, 0, 2, 1};
  for (std::size_t k = 0; k < 200; ++k) {
    const Vectord u = error_vector(s, p, c.L), sv = perturbation_vector(s);
    const Matrixd N = build_N(c, W.lambda, st.alpha, st.beta, k, false);
    step(s, W, p, cfg);
    EXPECT_LE(lemma1_excess(M, N, u, sv, error_vector(s, p, c.L)).maxCoeff(), 1e-9);
  }
}

// ------------------------------------------------------------ exact LTI

TEST(QuadLTI, MatchesCompositionOracle) {
  auto p = make_quadratic<double>(2, 3, 4, 1.0, 12);
  auto W = make_weights(build_topology(TopologyKind::exponential, 4));
  for (auto [a, b] : std::vector<std::pair<double, double>>{{0.03, 0.05}, {0.2, 0.1}, {0.0, 0.0}}) {
    auto lti = build_quad_lti(p, W, a, b);
    Matrixd ref = oracle::lti_by_composition(p, W.W, a, b);
    ASSERT_EQ(lti.Mtilde.rows(), ref.rows());
    const Matrixd Pi = oracle::consensus_projector(4, 2, 3);
    EXPECT_LE((lti.Mtilde * Pi - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(QuadLTI, UnperturbedSpectrum) {
  auto p = seed7_quadratic();
  auto W = make_weights(build_topology(TopologyKind::exponential, 4));
  auto lti = build_quad_lti(p, W, 0.0, 0.0);
  EXPECT_EQ(lti.Mtilde.rows(), 2 * 4 * 6 + 6);
  int ones = 0;
  for (const auto& z : eigenvalues(lti.Mtilde)) {
    if (std::abs(z - 1.0) <= 1e-10)
      ++ones;
    else
      EXPECT_LT(std::abs(z), 1.0 - 1e-6);
  }
  EXPECT_EQ(ones, 6);
  EXPECT_NEAR(spectral_radius(lti.Mtilde), 1.0, 1e-12);
}

TEST(QuadLTI, SingleNodeIsCentralizedGda) {
  auto p = make_quadratic<double>(3, 3, 1, 1.0, 7);
  auto W = make_weights(build_topology(TopologyKind::complete, 1));
  const double a = 0.05, b = 0.08;
  auto lti = build_quad_lti(p, W, a, b);
  Matrixd g(6, 6);
  g << Matrixd::Identity(3, 3) - a * p.Q_sym, -a * p.P_bar.transpose(), b * p.P_bar,
      Matrixd::Identity(3, 3) - b * p.R_sym;
  Matrixd sub(6, 6);
  // (x̄, ȳ) blocks sit at offsets n·p_x and 2n·p_x + p_x + n·p_y.
  const Index dx = 3, dy = 3 + 3 + 3 + 3;
  sub << lti.Mtilde.block(dx, dx, 3, 3), lti.Mtilde.block(dx, dy, 3, 3), lti.Mtilde.block(dy, dx, 3, 3),
      lti.Mtilde.block(dy, dy, 3, 3);
  EXPECT_LE((sub - g).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(lti.Mtilde.block(0, 0, 3, 3).norm(), 1e-15);
}

TEST(QuadLTI, ReproducesLiteTrajectory) {
  auto p = seed7_quadratic();
  auto W = make_weights(build_topology(TopologyKind::ring, 4));
  const double a = 0.02;
  auto lti = build_quad_lti(p, W, a, a);
  auto s = init_state(p, 7);
  Vectord u = lti_error(s, p);
  SolverConfig cfg{Variant::gt_gda_lite, a, a, 1, 0, 7, 1};
  for (int k = 0; k < 200; ++k) {
    step(s, W, p, cfg);
    u = lti.Mtilde * u;
    const Vectord t = lti_error(s, p);
    EXPECT_LE((t - u).norm(), 1e-11 * t.norm());
  }
}

TEST(QuadLTI, RejectsNonQuadratic) {
  auto p = make_regression<double>({Regularizer::convex_schmidt, 4, 4, 3, 1.0, 1});
  auto W = make_weights(build_topology(TopologyKind::complete, 3));
  EXPECT_THROW(build_quad_lti(p, W, 0.1, 0.1), InvalidParameter);
}

// -------------------------------------------------------------------- S

TEST(SMatrixTest, ScalarExample) {
  auto c = LocalCost<double>::zeros(1, 1);
  c.Q(0, 0) = 0.5;
  c.R(0, 0) = 0.5;
  c.P(0, 0) = 1.0;
  auto p = make_problem(CostKind::quadratic, std::vector<LocalCost<double>>{c});
  auto s = build_S(p);
  Matrixd expect(2, 2);
  expect << -1, -1, 1, -1;
  EXPECT_EQ(s.S, expect);
  ASSERT_EQ(s.eigenvalues.size(), 2u);
  for (const auto& z : s.eigenvalues) {
    EXPECT_NEAR(z.real(), -1.0, 1e-15);
    EXPECT_NEAR(std::abs(z.imag()), 1.0, 1e-15);
  }
  EXPECT_TRUE(s.stable);
}

TEST(SMatrixTest, ZeroRStillStable) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    EXPECT_TRUE(build_S(make_constrained<double>({3, 3, 4, 1.0, seed})).stable);
}

TEST(SMatrixTest, NegativeDefiniteQIsUnstable) {
  auto p = seed7_quadratic();
  auto locals = p.locals;
  for (auto& c : locals) c.Q = -c.Q;
  auto flipped = make_problem(CostKind::quadratic, locals);
  EXPECT_FALSE(build_S(flipped).stable);
}

// ---------------------------------------------------- eigen perturbation

TEST(EigenPerturbation, Seed7RatiosDecrease) {
  auto p = seed7_quadratic();
  auto W = make_weights(build_topology(TopologyKind::exponential, 4));
  auto rep = eigen_perturbation_check<double>(p, W, {1e-2, 1e-3, 1e-4});
  ASSERT_EQ(rep.points.size(), 3u);
  EXPECT_TRUE(rep.ratios_decreasing);
  for (const auto& pt : rep.points) EXPECT_FALSE(pt.ambiguous);
  EXPECT_LT(rep.points.back().spectral_radius, 1.0);
}

TEST(EigenPerturbation, SingleNodeSecondOrder) {
  auto p = make_quadratic<double>(3, 3, 1, 1.0, 7);
  auto W = make_weights(build_topology(TopologyKind::complete, 1));
  auto rep = eigen_perturbation_check<double>(p, W, {1e-2, 1e-3});
  // One node: M̃ on (x̄, ȳ) is I + αS exactly, so the remainder is rounding.
  for (const auto& pt : rep.points) EXPECT_LE(pt.ratio, 1e-10);
}

TEST(EigenPerturbation, RejectsIncreasingAlphas) {
  auto p = seed7_quadratic();
  auto W = make_weights(build_topology(TopologyKind::exponential, 4));
  EXPECT_THROW(eigen_perturbation_check<double>(p, W, {1e-3, 1e-2}), InvalidParameter);
}

// ------------------------------------------------------ spectral radius

TEST(SpectralRadius, SmallCases) {
  EXPECT_DOUBLE_EQ(spectral_radius(Matrixd(Matrixd::Identity(4, 4))), 1.0);
  Matrixd d = Matrixd::Zero(2, 2);
  d(0, 0) = 0.5;
  d(1, 1) = -0.9;
  EXPECT_NEAR(spectral_radius(d), 0.9, 1e-15);
}

TEST(SpectralRadius, RandomMatchesComplexSolver) {
  std::mt19937_64 rng(50);
  std::normal_distribution<double> nd;
  Matrixd m(50, 50);
  for (Index i = 0; i < 50; ++i)
    for (Index j = 0; j < 50; ++j) m(i, j) = nd(rng);
  EXPECT_NEAR(spectral_radius(m), oracle::spectral_radius_complex(m), 1e-9);
}

TEST(SpectralRadius, LargeUsesIteration) {
  Matrixd m = Matrixd::Zero(2100, 2100);
  for (Index i = 0; i < 2100; ++i) m(i, i) = 0.5 * double(i) / 2100.0;
  m(0, 0) = 0.8;
  EXPECT_NEAR(spectral_radius(m), 0.8, 1e-9);
  EXPECT_GT(frob(m), 0.0);
}

// ------------------------------------------------------ asymptotic bound

TEST(AsymptoticResponse, RunningMaxAndNeumannSeries) {
  Vectord sup;
  Vectord a(3), b(3);
  a << 1, 5, 2;
  b << 3, 4, 2;
  sup = running_max(sup, a);
  sup = running_max(sup, b);
  EXPECT_EQ(sup, Vectord((Vectord(3) << 3, 5, 2).finished()));

  Matrixd M(2, 2);
  M << 0.5, 0.1, 0.2, 0.3;
  Matrixd N = Matrixd::Identity(2, 2);
  Vectord s(2);
  s << 1, 2;
  // Fixed point of v = Mv + Ns, i.e. the Neumann series Σ M^k N s.
  Vectord series = Vectord::Zero(2), term = N * s;
  for (int k = 0; k < 400; ++k) {
    series += term;
    term = M * term;
  }
  EXPECT_LE((asymptotic_response(M, N, s) - series).norm(), 1e-13);
  EXPECT_THROW(asymptotic_response(Matrixd(Matrixd::Identity(2, 2)), N, s), InvalidParameter);
}
