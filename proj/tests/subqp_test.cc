#include "usbs/subqp.h"

#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "usbs/errors.h"
#include "usbs/symlin.h"

namespace usbs {
namespace {

using oracle::gaussian;

// Random model on a problem: orthonormal V (n x k) and a dense PSD Xbar
// whose statistics feed the projection.
struct RandomModel {
  Eigen::MatrixXd v;
  Eigen::MatrixXd xbar;
  AggregateStats stats;
};

RandomModel random_model(const SdpProblem& p, Eigen::Index k, std::mt19937_64& gen) {
  RandomModel r;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(p.n(), k, gen));
  r.v = qr.householderQ() * Eigen::MatrixXd::Identity(p.n(), k);
  const Eigen::MatrixXd f = gaussian(p.n(), 2, gen);
  r.xbar = 0.3 * f * f.transpose() / f.squaredNorm();
  r.stats.trace = r.xbar.trace();
  r.stats.cost = Eigen::MatrixXd(p.cost).cwiseProduct(r.xbar).sum();
  r.stats.image = p.ops->primal_image_dense(r.xbar);
  return r;
}

double dense_psi(const SdpProblem& p, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& nu, double rho) {
  const Eigen::VectorXd r = p.b - nu - p.ops->primal_image_dense(x);
  return Eigen::MatrixXd(p.cost).cwiseProduct(x).sum() + r.dot(y) -
         r.squaredNorm() / (2 * rho);
}

TEST(Assemble, MaxCutTriangleIdentityBasis) {
  SdpProblem p = build_maxcut(oracle::random_graph(3, 1.0, 1));
  ModelProjection mp = project_model(p, Eigen::MatrixXd::Identity(3, 3),
                                     AggregateStats::zero(3));
  const double rho = 0.5;
  QuadCoeffs c = assemble_quad_coeffs(mp, p.b, Eigen::VectorXd::Zero(3),
                                      Eigen::VectorXd::Zero(3), rho);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(6, 6);
  for (int d : {0, 3, 5}) expect(d, d) = p.alpha * p.alpha / rho;
  EXPECT_LE((c.q11 - expect).norm(), 1e-12);
  EXPECT_FALSE(c.has_eta);
}

TEST(Assemble, LargeRhoLimitIsEvalCoefficients) {
  std::mt19937_64 gen(2);
  QapInstance q;
  Eigen::MatrixXd w = gaussian(3, 3, gen).cwiseAbs();
  Eigen::MatrixXd d = gaussian(3, 3, gen).cwiseAbs();
  q.w = w + w.transpose();
  q.d = d + d.transpose();
  SdpProblem qp = build_qap(q);
  RandomModel m = random_model(qp, 3, gen);
  ModelProjection mp = project_model(qp, m.v, m.stats);
  Eigen::VectorXd y = gaussian(qp.m(), 1, gen);
  Eigen::VectorXd nu = proj_N(qp, gaussian(qp.m(), 1, gen));
  EvalCoeffs e = assemble_eval_coeffs(mp, y);
  QuadCoeffs c = assemble_quad_coeffs(mp, qp.b, y, nu, 1e12);
  EXPECT_LE(c.q11.norm(), 1e-8);
  EXPECT_LE((c.h1 - e.g1).norm(), 1e-4 * (1 + e.g1.norm()));
  EXPECT_NEAR(c.h2, e.g2, 1e-4 * (1 + std::abs(e.g2)));
}

TEST(Assemble, QuadraticMatchesDensePsi) {
  // psi(X(S, eta), nu) = -quad_value(S, eta) + const for
  // X = alpha (eta Xbar / tr Xbar + V S V^T).
  std::mt19937_64 gen(3);
  SdpProblem p = build_maxcut(oracle::random_graph(9, 0.5, 4));
  RandomModel m = random_model(p, 4, gen);
  ModelProjection mp = project_model(p, m.v, m.stats);
  ASSERT_TRUE(mp.has_eta);
  const double rho = 0.3;
  Eigen::VectorXd y = gaussian(p.m(), 1, gen);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(p.m());
  QuadCoeffs c = assemble_quad_coeffs(mp, p.b, y, nu, rho);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qs(c.q11);
  EXPECT_GE(qs.eigenvalues().minCoeff(), -1e-10);
  EXPECT_GE(c.q22, 0.0);

  auto lift = [&](const Eigen::MatrixXd& s, double eta) {
    return Eigen::MatrixXd(p.alpha * (eta * m.xbar / m.stats.trace + m.v * s * m.v.transpose()));
  };
  const Eigen::MatrixXd s1 = oracle::random_pd(4, gen) * 0.1;
  const Eigen::MatrixXd s2 = oracle::random_pd(4, gen) * 0.1;
  const double e1 = 0.2, e2 = 0.05;
  const double lhs = dense_psi(p, lift(s1, e1), y, nu, rho) - dense_psi(p, lift(s2, e2), y, nu, rho);
  const double rhs = -(quad_value(c, s1, e1) - quad_value(c, s2, e2));
  EXPECT_NEAR(lhs, rhs, 1e-10 * (1 + std::abs(lhs)));

  // The linear eval objective is <C - A^* y, X> up to sign.
  EvalCoeffs e = assemble_eval_coeffs(mp, y);
  const Eigen::MatrixXd z = Eigen::MatrixXd(p.cost - p.ops->adjoint_matrix(y));
  const double direct = z.cwiseProduct(lift(s1, e1)).sum();
  const double via = -(e.g1.dot(svec(s1)) + e1 * e.g2);
  EXPECT_NEAR(direct, via, 1e-10 * (1 + std::abs(direct)));
}

TEST(Assemble, RejectsBadInput) {
  SdpProblem p = build_maxcut(oracle::random_graph(4, 1.0, 1));
  ModelProjection mp = project_model(p, Eigen::MatrixXd::Identity(4, 2),
                                     AggregateStats::zero(4));
  EXPECT_THROW(assemble_eval_coeffs(mp, Eigen::VectorXd::Zero(3)), DimensionError);
  EXPECT_THROW(assemble_quad_coeffs(mp, p.b, p.b, p.b, 0.0), ArgumentError);
}

TEST(IpmEval, MatchesClosedForm) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index k = 1 + trial % 5;
    EvalCoeffs e = oracle::random_eval_coeffs(k, trial % 2 == 0, gen);
    IpmResult r = ipm_eval(e);
    EXPECT_FALSE(r.inexact);
    EXPECT_NEAR(r.value, eval_closed_form(e), 1e-6) << "k=" << k;
  }
}

TEST(IpmEval, ClosedFormCases) {
  EvalCoeffs e;
  e.g1 = svec(Eigen::Vector2d(3, -2).asDiagonal().toDenseMatrix());
  e.g2 = -5;
  e.has_eta = true;
  EXPECT_DOUBLE_EQ(eval_closed_form(e), -5.0);
  e.has_eta = false;
  EXPECT_DOUBLE_EQ(eval_closed_form(e), -2.0);
  e.g1 = svec(Eigen::Matrix2d::Identity());
  EXPECT_DOUBLE_EQ(eval_closed_form(e), 0.0);
}

TEST(IpmQuad, ScalarCase) {
  QuadCoeffs c;
  c.q11 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  c.q12 = Eigen::VectorXd::Zero(1);
  c.h1 = Eigen::VectorXd::Constant(1, -1.0);
  c.has_eta = false;
  IpmResult r = ipm_quad(c);
  // Both the budget slack and its multiplier vanish at the optimum, so S
  // converges only like the square root of the gap.
  EXPECT_NEAR(r.state.s(0, 0), 1.0, 1e-3);
  EXPECT_NEAR(r.value, -0.5, 1e-7);
}

TEST(IpmQuad, MatchesProjectedGradientOracle) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 2; ++trial) {
    QuadCoeffs c = oracle::random_quad_coeffs(3, trial == 0, gen);
    const double reference = oracle::projected_gradient_value(c, 3, 1e-3, 1000000);
    IpmResult r = ipm_quad(c);
    EXPECT_FALSE(r.inexact);
    EXPECT_NEAR(r.value, reference, 1e-5);
  }
}

TEST(IpmQuad, KktResidualsAtExit) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index k = 1 + trial % 4;
    QuadCoeffs c = oracle::random_quad_coeffs(k, trial % 2 == 1, gen);
    IpmResult r = ipm_quad(c);
    const auto [f1, f2] = ipm_stationarity(c, r.state);
    const double scale = 1 + c.h1.norm() + std::abs(c.h2);
    EXPECT_LE(f1.norm() + std::abs(f2), 1e-6 * scale);
    EXPECT_LE(r.mu, 1e-7);
    EXPECT_TRUE(ipm_state_interior(r.state, k, c.has_eta));
  }
}

TEST(IpmQuad, WarmStartNeedsNoMoreIterations) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 5; ++trial) {
    QuadCoeffs c = oracle::random_quad_coeffs(3, true, gen);
    IpmResult cold = ipm_quad(c);
    IpmResult warm = ipm_quad(c, &cold.state);
    EXPECT_LE(warm.iterations, cold.iterations);
    EXPECT_NEAR(warm.value, cold.value, 1e-7);
  }
}

TEST(IpmQuad, RejectsShapeMismatch) {
  QuadCoeffs c;
  c.q11 = Eigen::MatrixXd::Zero(2, 2);
  c.q12 = Eigen::VectorXd::Zero(2);
  c.h1 = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(ipm_quad(c), DimensionError);
}

TEST(Newton, EliminatedSolutionSolvesFullSystem) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index k = 1 + trial % 5;
    const bool has_eta = trial % 3 != 0;
    const IpmState st = oracle::random_interior_state(k, has_eta, gen);
    const double mu = 0.1 * complementarity(st, has_eta) / (2.0 * (k + 2));
    QuadCoeffs quad = oracle::random_quad_coeffs(k, has_eta, gen);
    EXPECT_LE(oracle::newton_residual(quad, st, newton_direction(quad, st, mu), mu), 1e-8);
    QuadCoeffs lin = QuadCoeffs::from_eval(oracle::random_eval_coeffs(k, has_eta, gen));
    EXPECT_LE(oracle::newton_residual(lin, st, newton_direction(lin, st, mu), mu), 1e-8);
  }
}

TEST(LineSearch, StaysInteriorWithinBoundary) {
  std::mt19937_64 gen(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index k = 1 + trial % 4;
    const IpmState st = oracle::random_interior_state(k, true, gen);
    IpmDirection d;
    d.ds = 3 * oracle::random_sym(k, gen);
    d.dt = 3 * oracle::random_sym(k, gen);
    d.deta = -0.5;
    d.dzeta = 0.2;
    d.domega = -0.1;
    const double delta = line_search_feasible(st, d, true);
    EXPECT_GT(delta, 0.0);
    EXPECT_LE(delta, 1.0);
    IpmState next = st;
    next.s += delta * d.ds;
    next.t += delta * d.dt;
    next.eta += delta * d.deta;
    next.zeta += delta * d.dzeta;
    next.omega += delta * d.domega;
    EXPECT_TRUE(ipm_state_interior(next, k, true));
    // Just past the boundary the iterate is no longer interior.
    IpmState far = st;
    const double beyond = std::min(1.0, delta / 0.99 * 1.02);
    if (beyond < 1.0) {
      far.s += beyond * d.ds;
      far.t += beyond * d.dt;
      far.eta += beyond * d.deta;
      far.zeta += beyond * d.dzeta;
      far.omega += beyond * d.domega;
      EXPECT_FALSE(ipm_state_interior(far, k, true));
    }
  }
}

TEST(LineSearch, UnboundedDirectionTakesFullStep) {
  IpmState st = ipm_initial_state(2, true);
  IpmDirection d;
  d.ds = Eigen::MatrixXd::Zero(2, 2);
  d.dt = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_DOUBLE_EQ(line_search_feasible(st, d, true), 1.0);
}

TEST(Barrier, ScheduleAndInitialState) {
  IpmState st = ipm_initial_state(3, true);
  EXPECT_TRUE(ipm_state_interior(st, 3, true));
  EXPECT_NEAR(st.s.trace() + st.eta, 4.0 / 10.0, 1e-15);
  const double comp = complementarity(st, true);
  EXPECT_NEAR(comp, 3.0 / 10 + 1.0 / 10 + 0.6, 1e-15);
  // gamma = 1 for delta <= 1/5, otherwise 1/2 - 2/5 delta^2.
  EXPECT_NEAR(barrier_update(1.0, st, 0.2, true), comp / 10.0, 1e-15);
  EXPECT_NEAR(barrier_update(1.0, st, 1.0, true), 0.1 * comp / 10.0, 1e-15);
  EXPECT_NEAR(barrier_update(1e-9, st, 1.0, true), 1e-9, 0.0);
  IpmState no_eta = ipm_initial_state(3, false);
  EXPECT_EQ(no_eta.eta, 0.0);
  EXPECT_TRUE(ipm_state_interior(no_eta, 3, false));
}

TEST(AlternatingMax, EqualityOnlyStopsAfterOnePass) {
  std::mt19937_64 gen(11);
  SdpProblem p = build_maxcut(oracle::random_graph(12, 0.4, 2));
  RandomModel m = random_model(p, 3, gen);
  ModelProjection mp = project_model(p, m.v, m.stats);
  AltMaxResult r = alternating_max(p, mp, gaussian(p.m(), 1, gen), 0.1);
  EXPECT_EQ(r.passes, 1);
  EXPECT_LE(r.nu.norm(), 0.0);
  // Statistics of X = eta Xbar + V S V^T.
  const Eigen::MatrixXd x = r.eta * m.xbar + m.v * r.s * m.v.transpose();
  EXPECT_NEAR(r.x.trace, x.trace(), 1e-12);
  EXPECT_LE(r.x.trace, p.alpha + 1e-9);
  EXPECT_LE((r.x.image - p.ops->primal_image_dense(x)).norm(), 1e-12);
  EXPECT_NEAR(r.x.cost, Eigen::MatrixXd(p.cost).cwiseProduct(x).sum(), 1e-12);
}

TEST(AlternatingMax, InequalitiesAscendAndReachFixedPoint) {
  std::mt19937_64 gen(12);
  QapInstance q;
  Eigen::MatrixXd w = gaussian(3, 3, gen).cwiseAbs();
  Eigen::MatrixXd d = gaussian(3, 3, gen).cwiseAbs();
  q.w = w + w.transpose();
  q.d = d + d.transpose();
  SdpProblem p = build_qap(q);
  for (int trial = 0; trial < 3; ++trial) {
    RandomModel m = random_model(p, 3, gen);
    ModelProjection mp = project_model(p, m.v, m.stats);
    const Eigen::VectorXd y = 0.1 * gaussian(p.m(), 1, gen);
    const double rho = 0.05;
    AltMaxResult r = alternating_max(p, mp, y, rho);
    ASSERT_GE(r.passes, 1);
    EXPECT_FALSE(r.inexact);
    for (size_t i = 1; i < r.psi.size(); ++i) {
      EXPECT_GE(r.psi[i], r.psi[i - 1] - 1e-8);
    }
    EXPECT_LE((proj_N(p, r.nu) - r.nu).norm(), 0.0);
    const Eigen::VectorXd fixed = proj_N(p, p.b - r.x.image - rho * y);
    EXPECT_LE((fixed - r.nu).norm(), 1e-6 * (1 + p.b.norm()));
  }
}

TEST(AlternatingMax, LargePositiveYGivesZeroNu) {
  // b - A X - rho y <= 0 on I forces nu = 0: make y very positive.
  std::mt19937_64 gen(13);
  QapInstance q;
  q.w = Eigen::MatrixXd::Ones(2, 2);
  q.d = Eigen::MatrixXd::Ones(2, 2);
  SdpProblem p = build_qap(q);
  RandomModel m = random_model(p, 2, gen);
  ModelProjection mp = project_model(p, m.v, m.stats);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(p.m(), 100.0);
  AltMaxResult r = alternating_max(p, mp, y, 0.1);
  EXPECT_LE(r.nu.norm(), 0.0);
}

TEST(PsiValue, Definition) {
  Eigen::Vector2d b(1, 2), y(0.5, -1), ax(0.25, 1), nu(0, -1);
  const double rho = 2.0;
  // r = b - nu - ax = (0.75, 2); <r, y> = -1.625; |r|^2 = 4.5625.
  EXPECT_NEAR(psi_value(b, y, rho, 3.0, ax, nu), 3.0 - 1.625 - 4.5625 / 4, 1e-15);
}

}  // namespace
}  // namespace usbs
