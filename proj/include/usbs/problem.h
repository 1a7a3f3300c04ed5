#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace usbs {

using SparseMat = Eigen::SparseMatrix<double>;

/// Linear map X -> (<A_1, X>, ..., <A_m, X>) over n x n symmetric X.
/// Implementations never materialize the A_i as a list of matrices.
class ConstraintOps {
 public:
  virtual ~ConstraintOps() = default;

  virtual Eigen::Index dim() const = 0;
  virtual Eigen::Index num_constraints() const = 0;

  /// A(V S V^T) for V n x k, S k x k symmetric.
  virtual Eigen::VectorXd primal_image_lowrank(const Eigen::MatrixXd& v,
                                               const Eigen::MatrixXd& s) const = 0;
  /// A(X) for a dense symmetric X.
  virtual Eigen::VectorXd primal_image_dense(const Eigen::MatrixXd& x) const = 0;
  /// A^*(y) = sum_i y_i A_i as a sparse symmetric matrix.
  virtual SparseMat adjoint_matrix(const Eigen::VectorXd& y) const = 0;
  /// m x svec_dim(k) matrix whose row i is svec(V^T A_i V).
  virtual Eigen::MatrixXd projected_rows(const Eigen::MatrixXd& v) const = 0;
  /// Frobenius norm of every A_i.
  virtual Eigen::VectorXd row_norms() const = 0;
  /// A_i <- factors(i) * A_i.
  virtual void scale_rows(const Eigen::VectorXd& factors) = 0;

  /// (A^* y) x.
  Eigen::VectorXd adjoint_matvec(const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& x) const;
  /// V^T (A^* y) V.
  Eigen::MatrixXd adjoint_inner_lowrank(const Eigen::VectorXd& y,
                                        const Eigen::MatrixXd& v) const;
};

/// A_i = d_i e_i e_i^T, i.e. A(X) = d .* diag(X) and A^*(y) = Diag(d .* y).
class DiagonalOps final : public ConstraintOps {
 public:
  explicit DiagonalOps(Eigen::Index n);

  Eigen::Index dim() const override { return weights_.size(); }
  Eigen::Index num_constraints() const override { return weights_.size(); }
  Eigen::VectorXd primal_image_lowrank(const Eigen::MatrixXd& v,
                                       const Eigen::MatrixXd& s) const override;
  Eigen::VectorXd primal_image_dense(const Eigen::MatrixXd& x) const override;
  SparseMat adjoint_matrix(const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd projected_rows(const Eigen::MatrixXd& v) const override;
  Eigen::VectorXd row_norms() const override;
  void scale_rows(const Eigen::VectorXd& factors) override;

 private:
  Eigen::VectorXd weights_;
};

/// One stored entry of a symmetric constraint matrix. An off-diagonal
/// entry stands for both (row, col) and (col, row).
struct SymEntry {
  std::int32_t row;
  std::int32_t col;
  double value;
};

/// General family: every A_i is a short list of symmetric entries.
class SparseEntryOps final : public ConstraintOps {
 public:
  explicit SparseEntryOps(Eigen::Index n) : n_(n) { offsets_.push_back(0); }

  /// Appends A_i given by its entries (row >= col not required).
  void add_constraint(const std::vector<SymEntry>& entries);

  Eigen::Index dim() const override { return n_; }
  Eigen::Index num_constraints() const override {
    return static_cast<Eigen::Index>(offsets_.size()) - 1;
  }
  Eigen::VectorXd primal_image_lowrank(const Eigen::MatrixXd& v,
                                       const Eigen::MatrixXd& s) const override;
  Eigen::VectorXd primal_image_dense(const Eigen::MatrixXd& x) const override;
  SparseMat adjoint_matrix(const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd projected_rows(const Eigen::MatrixXd& v) const override;
  Eigen::VectorXd row_norms() const override;
  void scale_rows(const Eigen::VectorXd& factors) override;

  /// Entries of A_i, for tests and diagnostics.
  std::vector<SymEntry> constraint(Eigen::Index i) const;

 private:
  Eigen::Index n_;
  std::vector<std::int64_t> offsets_;
  std::vector<SymEntry> entries_;
};

enum class ProblemKind { kMaxCut, kQap };

/// Identifies a constraint independently of its position: a family tag
/// followed by up to four indices in instance coordinates.
using ConstraintKey = std::array<std::int32_t, 5>;

/// Relation between a stored (scaled) problem and the instance it came from:
///   C_scaled = cost_scale * C, X = trace_scale * X_scaled,
///   A_i,scaled = row_scale(i) * A_i, b_i,scaled = row_scale(i) b_i / trace_scale.
struct Scaling {
  double cost_scale = 1.0;
  double trace_scale = 1.0;
  Eigen::VectorXd row_scale;
};

/// max <C, X>  s.t.  A_eq X = b_eq,  A_in X <= b_in,  X PSD,
/// with tr(X*) = 1 after scaling and alpha = 2 the trace budget of pen-D.
struct SdpProblem {
  ProblemKind kind = ProblemKind::kMaxCut;
  SparseMat cost;
  std::shared_ptr<ConstraintOps> ops;
  Eigen::VectorXd b;
  std::vector<std::uint8_t> is_ineq;
  double alpha = 2.0;
  Scaling scaling;
  std::vector<ConstraintKey> keys;
  /// Instance-level description of every matrix index (vertex or (a, b)
  /// pair); used to map warm starts between related instances.
  std::vector<ConstraintKey> primal_keys;

  Eigen::Index n() const { return cost.rows(); }
  Eigen::Index m() const { return b.size(); }
  Eigen::Index num_ineq() const;

  /// Objective in instance units from a scaled <C, X>.
  double unscale_objective(double scaled) const {
    return scaled * scaling.trace_scale / scaling.cost_scale;
  }
};

/// Weighted undirected graph on vertices 0..n-1, each edge stored once.
struct Graph {
  Eigen::Index n = 0;
  struct Edge {
    std::int64_t u;
    std::int64_t v;
    double w;
  };
  std::vector<Edge> edges;

  SparseMat laplacian() const;
};

struct QapInstance {
  Eigen::MatrixXd w;  // flow, symmetric
  Eigen::MatrixXd d;  // distance, symmetric
  Eigen::Index size() const { return w.rows(); }
  /// tr(W P D P^T) where P maps a -> perm[a].
  double objective(const std::vector<int>& perm) const;
};

/// MaxCut relaxation: C = L/4, diag(X) = 1, rescaled so that ||C||_F = 1,
/// tr(X*) = 1.
SdpProblem build_maxcut(const Graph& g);

/// QAP relaxation on matrices of side n^2 + 1 (index 0 is the homogenizing
/// entry, index 1 + a + n b holds B(a, b)). The cost is negated so the
/// minimization becomes a maximization. Rows are normalized to equal
/// Frobenius norm and the whole operator to unit spectral norm.
SdpProblem build_qap(const QapInstance& q);

/// Projection of z onto {z_I <= b_I, z_I' = b_I'}.
Eigen::VectorXd proj_K(const SdpProblem& p, const Eigen::VectorXd& z);

/// Projection onto N = {nu_I >= 0, nu_I' = 0}; nu is the slack b - A X on I.
Eigen::VectorXd proj_N(const SdpProblem& p, const Eigen::VectorXd& v);

/// Largest singular value of the stored constraint operator (power
/// iteration on A A^*).
double estimate_op_norm(const ConstraintOps& ops, double rel_tol = 1e-6,
                        int max_iter = 1000);

/// Partial traces of an (n1 n2) x (n1 n2) matrix viewed as n1 x n1 blocks
/// of size n2: trace_outer sums the diagonal blocks (result n2 x n2);
/// trace_inner traces every block (result n1 x n1).
Eigen::MatrixXd partial_trace_outer(const Eigen::MatrixXd& y, Eigen::Index n1);
Eigen::MatrixXd partial_trace_inner(const Eigen::MatrixXd& y, Eigen::Index n1);

}  // namespace usbs
