#include "usbs/eigsolve.h"

#include <algorithm>
#include <cmath>

#include "usbs/errors.h"
#include "usbs/rng.h"
#include "usbs/symlin.h"

namespace usbs {
namespace {

Eigen::MatrixXd materialize(const SymmetricOperator& op) {
  Eigen::MatrixXd m(op.dim, op.dim);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(op.dim);
  for (Eigen::Index j = 0; j < op.dim; ++j) {
    e(j) = 1.0;
    m.col(j) = op.apply(e);
    e(j) = 0.0;
  }
  return 0.5 * (m + m.transpose());
}

// Random unit vector orthogonal to the first `used` columns of q.
bool fresh_direction(const Eigen::MatrixXd& q, Eigen::Index used,
                     NormalStream& rng, Eigen::VectorXd* out) {
  for (int attempt = 0; attempt < 5; ++attempt) {
    Eigen::VectorXd v = rng.vector(q.rows());
    for (int pass = 0; pass < 2; ++pass) {
      v -= q.leftCols(used) * (q.leftCols(used).transpose() * v);
    }
    const double nv = v.norm();
    if (nv > 1e-8) {
      *out = v / nv;
      return true;
    }
  }
  return false;
}

}  // namespace

SymmetricOperator make_operator(const Eigen::SparseMatrix<double>& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("make_operator: matrix is not square");
  }
  SymmetricOperator op;
  op.dim = m.rows();
  op.apply = [m](const Eigen::VectorXd& x) -> Eigen::VectorXd { return m * x; };
  return op;
}

EigResult dense_top(const Eigen::MatrixXd& m, int k) {
  if (m.rows() != m.cols()) {
    throw DimensionError("dense_top: matrix is not square");
  }
  k = std::min<int>(k, static_cast<int>(m.rows()));
  auto [w, v] = small_eigh(m);
  EigResult r;
  r.values = w.head(k);
  r.vectors = v.leftCols(k);
  r.residuals = ((m * r.vectors) - r.vectors * r.values.asDiagonal())
                    .colwise()
                    .norm()
                    .transpose();
  r.converged = true;
  r.leading_history.push_back(r.values.size() > 0 ? r.values(0) : 0.0);
  return r;
}

EigResult lanczos_top(const SymmetricOperator& op, int k,
                      const LanczosOptions& opts) {
  const Eigen::Index n = op.dim;
  if (k <= 0) throw ArgumentError("lanczos_top: k must be positive");
  if (k >= n || opts.inner_iters >= n) {
    EigResult r = dense_top(materialize(op), k);
    r.matvecs = static_cast<int>(n);
    return r;
  }
  const Eigen::Index m = std::max<Eigen::Index>(opts.inner_iters, k + 2);
  // Ritz vectors kept across a restart.
  const Eigen::Index keep =
      std::min<Eigen::Index>(m - 2, std::max<Eigen::Index>(k + 1, m / 2));

  NormalStream rng(derive_seed(opts.seed, 0x4c41));
  Eigen::MatrixXd q(n, m + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
  {
    Eigen::VectorXd v0 = rng.vector(n);
    q.col(0) = v0 / v0.norm();
  }

  EigResult r;
  Eigen::Index start = 0;  // columns [0, start) are locked Ritz vectors
  double beta_last = 0.0;
  Eigen::VectorXd theta;
  Eigen::MatrixXd z;
  for (int cycle = 0;; ++cycle) {
    for (Eigen::Index j = start; j < m; ++j) {
      Eigen::VectorXd w = op.apply(q.col(j));
      ++r.matvecs;
      Eigen::VectorXd coef = q.leftCols(j + 1).transpose() * w;
      w -= q.leftCols(j + 1) * coef;
      const Eigen::VectorXd coef2 = q.leftCols(j + 1).transpose() * w;
      w -= q.leftCols(j + 1) * coef2;
      coef += coef2;
      for (Eigen::Index i = 0; i <= j; ++i) {
        h(i, j) = coef(i);
        h(j, i) = coef(i);
      }
      double beta = w.norm();
      Eigen::VectorXd next;
      if (beta > 1e-12 * (1.0 + std::abs(h(j, j)))) {
        next = w / beta;
      } else {
        // Invariant subspace: continue with a fresh orthogonal direction.
        beta = 0.0;
        if (!fresh_direction(q, j + 1, rng, &next)) {
          next = Eigen::VectorXd::Zero(n);
        }
      }
      q.col(j + 1) = next;
      if (j + 1 < m) {
        h(j + 1, j) = beta;
        h(j, j + 1) = beta;
      }
      beta_last = beta;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) {
      throw ConditioningError("lanczos_top: projected eigensolve failed");
    }
    // Descending order.
    theta = es.eigenvalues().reverse();
    z = es.eigenvectors().rowwise().reverse();
    r.leading_history.push_back(theta(0));

    const double scale = opts.tol * (1.0 + std::abs(theta(0)));
    bool done = true;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (std::abs(beta_last * z(m - 1, i)) > scale) {
        done = false;
        break;
      }
    }
    if (done) r.converged = true;
    if (done || cycle >= opts.max_restarts) break;

    // Thick restart: keep the leading Ritz vectors plus the residual
    // direction; the projected matrix becomes an arrowhead.
    ++r.restarts;
    const Eigen::MatrixXd ritz = q.leftCols(m) * z.leftCols(keep);
    const Eigen::VectorXd resid = q.col(m);
    q.leftCols(keep) = ritz;
    q.col(keep) = resid;
    h.setZero();
    for (Eigen::Index i = 0; i < keep; ++i) {
      h(i, i) = theta(i);
      const double s = beta_last * z(m - 1, i);
      h(i, keep) = s;
      h(keep, i) = s;
    }
    // Column `keep` is regenerated by the next cycle's first step; the
    // arrowhead couplings above are recomputed there via Gram-Schmidt.
    start = keep;
  }

  r.values = theta.head(k);
  r.vectors = q.leftCols(m) * z.leftCols(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    r.vectors.col(i).normalize();
  }
  r.residuals.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    r.residuals(i) = std::abs(beta_last * z(m - 1, i));
  }
  return r;
}

}  // namespace usbs
