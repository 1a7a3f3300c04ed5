#include "usbs/symlin.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "usbs/errors.h"

namespace usbs {
namespace {

const double kSqrt2 = std::sqrt(2.0);

Eigen::Index triangular_root(Eigen::Index len) {
  const auto k = static_cast<Eigen::Index>(
      std::llround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
  if (k < 0 || svec_dim(k) != len) {
    throw DimensionError("svec length " + std::to_string(len) +
                         " is not a triangular number");
  }
  return k;
}

}  // namespace

Eigen::VectorXd svec(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("svec needs a square matrix");
  }
  const Eigen::Index k = a.rows();
  Eigen::VectorXd v(svec_dim(k));
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    v(r++) = a(j, j);
    for (Eigen::Index i = j + 1; i < k; ++i) {
      v(r++) = kSqrt2 * a(i, j);
    }
  }
  return v;
}

Eigen::MatrixXd svec_inv(const Eigen::VectorXd& v) {
  const Eigen::Index k = triangular_root(v.size());
  Eigen::MatrixXd a(k, k);
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    a(j, j) = v(r++);
    for (Eigen::Index i = j + 1; i < k; ++i) {
      a(i, j) = v(r++) / kSqrt2;
      a(j, i) = a(i, j);
    }
  }
  return a;
}

Eigen::SparseMatrix<double> svec_basis_matrix(Eigen::Index k) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<size_t>(k * k));
  Eigen::Index r = 0;
  const double h = 1.0 / kSqrt2;
  for (Eigen::Index j = 0; j < k; ++j) {
    entries.emplace_back(r++, j + j * k, 1.0);
    for (Eigen::Index i = j + 1; i < k; ++i) {
      entries.emplace_back(r, i + j * k, h);
      entries.emplace_back(r, j + i * k, h);
      ++r;
    }
  }
  Eigen::SparseMatrix<double> u(svec_dim(k), k * k);
  u.setFromTriplets(entries.begin(), entries.end());
  return u;
}

Eigen::MatrixXd symm_kron(const Eigen::MatrixXd& g, const Eigen::MatrixXd& h) {
  if (g.rows() != g.cols() || h.rows() != h.cols() || g.rows() != h.rows()) {
    throw DimensionError("symm_kron operands must be square and equal size");
  }
  const Eigen::Index k = g.rows();
  const Eigen::Index k2 = k * k;
  // (G kron H)(a, b) with a = a1 * k + a2, b = b1 * k + b2.
  Eigen::MatrixXd kron(k2, k2);
  for (Eigen::Index a1 = 0; a1 < k; ++a1) {
    for (Eigen::Index b1 = 0; b1 < k; ++b1) {
      kron.block(a1 * k, b1 * k, k, k) = g(a1, b1) * h + h(a1, b1) * g;
    }
  }
  const Eigen::SparseMatrix<double> u = svec_basis_matrix(k);
  const Eigen::MatrixXd uk = u * kron;
  return 0.5 * (uk * u.transpose());
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& cols) {
  const Eigen::Index n = cols.rows();
  const Eigen::Index p = cols.cols();
  double max_norm = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    max_norm = std::max(max_norm, cols.col(j).norm());
  }
  if (p == 0 || max_norm == 0.0 || !std::isfinite(max_norm)) {
    throw ConditioningError("orthonormalize: no usable columns");
  }
  const double drop = 1e-12 * max_norm;
  Eigen::MatrixXd work = cols;
  std::vector<bool> used(static_cast<size_t>(p), false);
  Eigen::MatrixXd q(n, std::min(n, p));
  Eigen::Index rank = 0;
  while (rank < q.cols()) {
    Eigen::Index best = -1;
    double best_norm = drop;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      const double nj = work.col(j).norm();
      if (nj > best_norm) {
        best_norm = nj;
        best = j;
      }
    }
    if (best < 0) break;
    used[static_cast<size_t>(best)] = true;
    Eigen::VectorXd v = work.col(best);
    // Second pass against the accepted basis for numerical orthogonality.
    v -= q.leftCols(rank) * (q.leftCols(rank).transpose() * v);
    const double nv = v.norm();
    if (nv <= drop) continue;
    v /= nv;
    q.col(rank++) = v;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!used[static_cast<size_t>(j)]) {
        work.col(j) -= v * v.dot(work.col(j));
      }
    }
  }
  if (rank == 0) {
    throw ConditioningError("orthonormalize: all columns below drop tolerance");
  }
  return q.leftCols(rank);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> small_eigh(
    const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) {
    throw DimensionError("small_eigh needs a square matrix");
  }
  const Eigen::Index k = s.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) {
    throw ConditioningError("small_eigh: eigensolver did not converge");
  }
  std::vector<Eigen::Index> order(static_cast<size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd& w = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&w](Eigen::Index a, Eigen::Index b) { return w(a) > w(b); });
  Eigen::VectorXd values(k);
  Eigen::MatrixXd vectors(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index src = order[static_cast<size_t>(i)];
    values(i) = w(src);
    Eigen::VectorXd v = es.eigenvectors().col(src);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0) v = -v;
    vectors.col(i) = v;
  }
  return {values, vectors};
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& m,
                          const Eigen::VectorXd& rhs) {
  if (m.rows() != m.cols() || m.rows() != rhs.size()) {
    throw DimensionError("solve_spd: shape mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("solve_spd: matrix is not positive definite");
  }
  Eigen::VectorXd x = llt.solve(rhs);
  if (!x.allFinite()) {
    throw ConditioningError("solve_spd: non-finite solution");
  }
  return x;
}

}  // namespace usbs
