#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "usbs/eigsolve.h"
#include "usbs/problem.h"
#include "usbs/sketch.h"
#include "usbs/subqp.h"

namespace usbs {

struct SolverConfig {
  double rho = 0.01;
  double beta = 0.25;
  int kc = 10;
  int kp = 1;
  double eps = 1e-3;
  /// Rank of the Nystrom sketch of Xbar; 0 keeps Xbar as a dense matrix.
  int sketch_rank = 10;
  bool store_psi = true;
  /// Also keep a dense Xbar next to the sketch (small n, for checking).
  bool dense_shadow = false;
  int max_iters = 1000;
  double max_time = 0.0;  // seconds; 0 means no limit
  std::uint64_t seed = 0;
  bool linf_check = false;
  LanczosOptions lanczos;
  AltMaxOptions altmax;
  IpmOptions eval_ipm;
};

/// Defaults used for each problem family.
SolverConfig default_config(ProblemKind kind);

/// Where Xbar lives: a dense matrix, a sketch, or both.
struct PrimalStore {
  std::optional<Eigen::MatrixXd> dense;
  std::optional<NystromSketch> sketch;
};

struct BundleModel {
  Eigen::MatrixXd basis;  // V, orthonormal columns
  AggregateStats xbar;
  PrimalStore store;
};

/// Primal iterate X = Xbar + W diag(lambda) W^T, where the low-rank part is
/// the block of the last subproblem solution kept in the basis.
struct PrimalIterate {
  AggregateStats stats;
  Eigen::MatrixXd extra_w;
  Eigen::VectorXd extra_lambda;
};

struct SolverState {
  Eigen::VectorXd y;
  Eigen::VectorXd nu;
  double f_y = 0.0;
  double lambda_max_y = 0.0;
  BundleModel model;
  PrimalIterate x;
  int iteration = 0;
  int descent_steps = 0;
  int null_steps = 0;
  std::uint64_t eig_calls = 0;
};

struct PenalizedValue {
  double f = 0.0;
  double lambda_max = 0.0;
  Eigen::MatrixXd vectors;  // leading eigenvectors of C - A^* y
  bool feasible = true;     // false when y_I has a negative entry
};

/// f(y) = alpha [lambda_max(C - A^* y)]_+ + <b, y>, +infinity outside Y.
PenalizedValue penalized_obj(const SdpProblem& p, const Eigen::VectorXd& y,
                             int k, const LanczosOptions& opts);

/// y_t - (b - nu - A X) / rho, with the I block clipped at 0 to absorb
/// rounding (a no-op for nu = proj_N(b - A X - rho y_t)).
Eigen::VectorXd candidate_iterate(const SdpProblem& p, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& nu,
                                  const Eigen::VectorXd& image_x, double rho);

/// beta (f_y - model_val) <= f_y - f_cand.
bool descent_test(double f_y, double f_cand, double model_val, double beta);

/// Folds the subproblem solution (eta, S) into the model: the top kp
/// eigenpairs of S stay in the basis with the new eigenvectors, the rest
/// go into Xbar. Returns the low-rank part kept out of Xbar.
PrimalIterate model_update(const SdpProblem& p, BundleModel& model, double eta,
                           const Eigen::MatrixXd& s,
                           const Eigen::MatrixXd& new_vectors, int kp,
                           const AggregateStats& x_stats);

struct Residuals {
  double rel_subopt = 0.0;
  double rel_infeas = 0.0;
  double linf_infeas = 0.0;
  double dual_feas = 0.0;  // lambda_max(C - A^* y)
  double gap = 0.0;        // |<b, y> - <C, X>|
};

/// rel_subopt = |f(y) - <C, X>| / (1 + |<C, X>|), which bounds the
/// suboptimality of X since f(y) >= <C, X*>.
/// rel_infeas = dist(A X, K) / (1 + |b|); linf_infeas is its sup-norm
/// version without normalization.
Residuals compute_residuals(const SdpProblem& p, const AggregateStats& x,
                            const Eigen::VectorXd& y, double f_y,
                            double lambda_max_y);

enum class SolveStatus { kConverged, kIterationLimit, kTimeLimit };

struct IterationInfo {
  int iteration = 0;
  double elapsed = 0.0;
  bool descent = false;
  double f_y_prev = 0.0;
  double f_cand = 0.0;
  double model_cand = 0.0;  // model value at the candidate (before update)
  Residuals residuals;
  const SolverState* state = nullptr;
  const Eigen::VectorXd* candidate = nullptr;
  const AltMaxResult* altmax = nullptr;
  const ModelProjection* projection = nullptr;
};

using IterationCallback = std::function<void(const IterationInfo&)>;

struct SolveResult {
  SolveStatus status = SolveStatus::kIterationLimit;
  SolverState state;
  Residuals residuals;
  double elapsed = 0.0;
};

/// Cold start: y = 0, Xbar = 0, basis = leading eigenvectors of C.
SolverState initial_state(const SdpProblem& p, const SolverConfig& cfg);

/// Spectral bundle iterations from `init` (or a cold start) until the
/// residuals fall below cfg.eps or a budget runs out.
SolveResult usbs_solve(const SdpProblem& p, const SolverConfig& cfg,
                       const SolverState* init = nullptr,
                       const IterationCallback& cb = {});

/// Low-rank factor of the current primal iterate. With a sketch this is
/// the Nystrom reconstruction; with a dense store the top `rank`
/// eigenpairs (all of them when rank <= 0).
LowRankFactor primal_factor(const SolverState& st, int rank = 0);

/// Dense primal iterate (requires a dense store).
Eigen::MatrixXd primal_dense(const SolverState& st);

/// old index -> new index, -1 when the entry has no counterpart.
struct IndexMapping {
  std::vector<std::int64_t> primal;
  std::vector<std::int64_t> constraint;
};

/// Matches primal indices and constraints of two instances by their keys.
IndexMapping derive_mapping(const SdpProblem& from, const SdpProblem& to);

/// Moves a state of a related (smaller) problem onto `to`: duals are
/// mapped through the scalings and padded with zeros, the primal factor is
/// padded with zero rows and rescaled to the new trace normalization, and
/// its statistics are recomputed against the new data.
SolverState warm_start_pad(const SolverState& prev, const Scaling& from_scaling,
                           const SdpProblem& to, const IndexMapping& map,
                           const SolverConfig& cfg);

}  // namespace usbs
