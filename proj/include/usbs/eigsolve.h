#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace usbs {

/// Symmetric linear operator given by its matrix-vector product.
struct SymmetricOperator {
  Eigen::Index dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
};

/// Wraps a sparse symmetric matrix (both triangles stored).
SymmetricOperator make_operator(const Eigen::SparseMatrix<double>& m);

struct LanczosOptions {
  int inner_iters = 32;
  int max_restarts = 10;
  /// Residual tolerance, relative: tol * (1 + |leading Ritz value|).
  double tol = 1e-9;
  std::uint64_t seed = 0;
};

struct EigResult {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // n x k, orthonormal columns
  Eigen::VectorXd residuals;
  bool converged = false;
  int restarts = 0;
  int matvecs = 0;
  /// Leading Ritz value at the end of every Lanczos cycle.
  std::vector<double> leading_history;
};

/// The k algebraically largest eigenpairs via thick-restart Lanczos with
/// full reorthogonalization. Falls back to a dense solve when k >= dim or
/// the Krylov space would span the whole space.
EigResult lanczos_top(const SymmetricOperator& op, int k,
                      const LanczosOptions& opts = {});

/// Dense reference path: the k largest eigenpairs of a symmetric matrix.
EigResult dense_top(const Eigen::MatrixXd& m, int k);

}  // namespace usbs
