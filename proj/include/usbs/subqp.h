#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "usbs/problem.h"

namespace usbs {

/// Linear statistics of the aggregate matrix Xbar, enough to evaluate the
/// model without storing Xbar: tr(Xbar), <C, Xbar>, A(Xbar).
struct AggregateStats {
  double trace = 0.0;
  double cost = 0.0;
  Eigen::VectorXd image;

  static AggregateStats zero(Eigen::Index m) {
    return {0.0, 0.0, Eigen::VectorXd::Zero(m)};
  }
};

/// The current model restricted to its basis V. The subproblems below are
/// posed in normalized variables (S', eta') with tr(S') + eta' <= 1, where
/// X = alpha (eta' Xbar / tr(Xbar) + V S' V^T).
struct ModelProjection {
  double alpha = 2.0;
  Eigen::MatrixXd basis;  // V, n x k
  Eigen::MatrixXd g;      // m x K, row i = svec(V^T A_i V)
  Eigen::VectorXd vcv;    // svec(V^T C V)
  bool has_eta = false;   // false when tr(Xbar) = 0
  double trace = 0.0;     // tr(Xbar)
  Eigen::VectorXd a_unit; // A(Xbar) / tr(Xbar)
  double c_unit = 0.0;    // <C, Xbar> / tr(Xbar)

  Eigen::Index k() const { return basis.cols(); }
};

ModelProjection project_model(const SdpProblem& p, const Eigen::MatrixXd& v,
                              const AggregateStats& xbar);

/// min g1^T svec(S) + eta g2 over the normalized model set.
struct EvalCoeffs {
  Eigen::VectorXd g1;
  double g2 = 0.0;
  bool has_eta = true;
};

/// min 1/2 s^T Q11 s + eta q12^T s + 1/2 eta^2 q22 + h1^T s + eta h2.
struct QuadCoeffs {
  Eigen::MatrixXd q11;
  Eigen::VectorXd q12;
  double q22 = 0.0;
  Eigen::VectorXd h1;
  double h2 = 0.0;
  bool has_eta = true;

  static QuadCoeffs from_eval(const EvalCoeffs& e);
};

EvalCoeffs assemble_eval_coeffs(const ModelProjection& mp,
                                const Eigen::VectorXd& y);

QuadCoeffs assemble_quad_coeffs(const ModelProjection& mp,
                                const Eigen::VectorXd& b,
                                const Eigen::VectorXd& y,
                                const Eigen::VectorXd& nu, double rho);

/// Interior-point iterate: primal (S, eta), multipliers T for S >= 0, zeta
/// for eta >= 0, omega for the trace budget. eta and zeta are unused when
/// the aggregate block is absent.
struct IpmState {
  Eigen::MatrixXd s;
  Eigen::MatrixXd t;
  double eta = 0.0;
  double zeta = 0.0;
  double omega = 1.0;

  double slack() const { return 1.0 - s.trace() - eta; }
};

struct IpmDirection {
  Eigen::MatrixXd ds;
  Eigen::MatrixXd dt;
  double deta = 0.0;
  double dzeta = 0.0;
  double domega = 0.0;
};

struct IpmOptions {
  double mu_tol = 1e-7;
  /// Stationarity residuals must also fall below this (absolute).
  double residual_tol = 1e-9;
  /// ... and so must the complementarity gap <S, T> + eta zeta + omega slack,
  /// which bounds the distance of the returned value from the optimum.
  double gap_tol = 1e-8;
  /// Weight of the cold start mixed into a warm start.
  double warm_blend = 1e-3;
  int max_iter = 100;
  double boundary_fraction = 0.99;
  double backtrack = 0.8;
  double min_step = 1e-12;
};

struct IpmResult {
  IpmState state;
  double value = 0.0;
  double mu = 0.0;
  int iterations = 0;
  bool inexact = false;
};

/// Cold start: S = I / (2(k+2)), eta = 1 / (2(k+2)), T = I, zeta = omega = 1.
IpmState ipm_initial_state(Eigen::Index k, bool has_eta);

/// True when every cone variable and the budget slack are strictly interior.
bool ipm_state_interior(const IpmState& st, Eigen::Index k, bool has_eta);

/// Residuals of the two stationarity equations at st.
std::pair<Eigen::VectorXd, double> ipm_stationarity(const QuadCoeffs& c,
                                                    const IpmState& st);

/// Objective of the quadratic subproblem at (S, eta).
double quad_value(const QuadCoeffs& c, const Eigen::MatrixXd& s, double eta);

/// Newton direction for the perturbed KKT system at barrier mu, obtained
/// from the reduced system in svec(dS) and back substitution.
IpmDirection newton_direction(const QuadCoeffs& c, const IpmState& st,
                              double mu);

/// Largest step keeping the iterate interior: boundary_fraction times the
/// exact boundary step (capped at 1), then shrunk by `backtrack` until both
/// matrix blocks pass a Cholesky test. Throws StepFailure below min_step.
double line_search_feasible(const IpmState& st, const IpmDirection& d,
                            bool has_eta, const IpmOptions& opts = {});

/// Complementarity <S, T> + eta zeta + omega slack.
double complementarity(const IpmState& st, bool has_eta);

/// min(mu_prev, gamma * complementarity / (2(k+2))) with gamma = 1 for
/// short steps (delta <= 1/5) and 0.5 - 0.4 delta^2 otherwise.
double barrier_update(double mu_prev, const IpmState& st, double delta,
                      bool has_eta);

/// Solves the quadratic subproblem. A warm state is mixed with the cold
/// start (weight opts.warm_blend); if that run stalls, it is redone cold.
IpmResult ipm_quad(const QuadCoeffs& c, const IpmState* warm = nullptr,
                   const IpmOptions& opts = {});

IpmResult ipm_eval(const EvalCoeffs& c, const IpmOptions& opts = {});

/// Exact minimum of the linear eval problem: min(lambda_min(svec_inv(g1)),
/// g2, 0) (g2 dropped without the aggregate block).
double eval_closed_form(const EvalCoeffs& c);

/// Model value fhat(y) = -min(eval problem) + <b, y>.
double model_value(const ModelProjection& mp, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& y, const IpmOptions& opts = {});

struct AltMaxOptions {
  int max_passes = 500;
  double tol = 1e-8;  // on ||delta nu||, relative to 1 + ||b||
  IpmOptions ipm;
};

/// Maximizer of psi_t over the model set and N, in unnormalized form:
/// X = eta Xbar + V S V^T.
struct AltMaxResult {
  double eta = 0.0;
  Eigen::MatrixXd s;
  Eigen::VectorXd nu;
  AggregateStats x;  // statistics of X
  int passes = 0;
  int ipm_iterations = 0;
  bool inexact = false;
  std::vector<double> psi;  // psi after every pass
};

/// psi_t(X, nu) = <C, X> + <b - nu - A X, y> - |b - nu - A X|^2 / (2 rho).
double psi_value(const Eigen::VectorXd& b, const Eigen::VectorXd& y,
                 double rho, double cost_x, const Eigen::VectorXd& image_x,
                 const Eigen::VectorXd& nu);

/// Alternates the X step (ipm_quad) and the closed-form nu step until nu
/// settles. The first X step uses nu0 projected onto N (0 when absent).
AltMaxResult alternating_max(const SdpProblem& p, const ModelProjection& mp,
                             const Eigen::VectorXd& y, double rho,
                             const AltMaxOptions& opts = {},
                             const Eigen::VectorXd* nu0 = nullptr);

}  // namespace usbs
