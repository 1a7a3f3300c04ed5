#pragma once

#include <utility>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace usbs {

/// Length of svec(A) for a k x k symmetric A.
inline Eigen::Index svec_dim(Eigen::Index k) { return k * (k + 1) / 2; }

/// Stacks the lower triangle column by column, off-diagonals scaled by
/// sqrt(2), so that <svec(A), svec(B)> = tr(AB).
Eigen::VectorXd svec(const Eigen::MatrixXd& a);

/// Inverse of svec. Throws DimensionError when the length is not triangular.
Eigen::MatrixXd svec_inv(const Eigen::VectorXd& v);

/// The K x k^2 matrix U with svec(A) = U vec(A) for symmetric A.
Eigen::SparseMatrix<double> svec_basis_matrix(Eigen::Index k);

/// Matrix of the operator svec(A) -> 1/2 svec(H A G^T + G A H^T), formed as
/// 1/2 U (G kron H + H kron G) U^T.
Eigen::MatrixXd symm_kron(const Eigen::MatrixXd& g, const Eigen::MatrixXd& h);

/// Orthonormal basis for the span of the columns. Columns are picked by
/// largest remaining norm (ties to the lowest index); anything below
/// 1e-12 times the largest input column norm is dropped. Throws
/// ConditioningError when nothing survives.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& cols);

/// Eigendecomposition of a small symmetric matrix, values in descending
/// order. Each eigenvector has its largest-magnitude entry positive.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> small_eigh(
    const Eigen::MatrixXd& s);

/// Solves M x = rhs for symmetric positive definite M. Throws
/// ConditioningError when the Cholesky factorization fails.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs);

}  // namespace usbs
