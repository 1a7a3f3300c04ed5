#include "usbs/problem.h"

#include <cmath>

#include "usbs/errors.h"
#include "usbs/symlin.h"

namespace usbs {
namespace {

const double kSqrt2 = std::sqrt(2.0);

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Adds scale * svec(a a^T) to out.
void add_svec_outer(const Eigen::Ref<const Eigen::RowVectorXd>& a, double scale,
                    Eigen::Ref<Eigen::RowVectorXd> out) {
  const Eigen::Index k = a.size();
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    out(r++) += scale * a(j) * a(j);
    for (Eigen::Index i = j + 1; i < k; ++i) {
      out(r++) += scale * kSqrt2 * a(i) * a(j);
    }
  }
}

// Adds scale * svec(a b^T + b a^T) to out.
void add_svec_sym(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                  const Eigen::Ref<const Eigen::RowVectorXd>& b, double scale,
                  Eigen::Ref<Eigen::RowVectorXd> out) {
  const Eigen::Index k = a.size();
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    out(r++) += scale * 2.0 * a(j) * b(j);
    for (Eigen::Index i = j + 1; i < k; ++i) {
      out(r++) += scale * kSqrt2 * (a(i) * b(j) + a(j) * b(i));
    }
  }
}

void check_lowrank(Eigen::Index n, const Eigen::MatrixXd& v,
                   const Eigen::MatrixXd& s) {
  if (v.rows() != n || s.rows() != v.cols() || s.cols() != v.cols()) {
    throw DimensionError("primal_image_lowrank: shape mismatch");
  }
}

}  // namespace

Eigen::VectorXd ConstraintOps::adjoint_matvec(const Eigen::VectorXd& y,
                                              const Eigen::VectorXd& x) const {
  return adjoint_matrix(y) * x;
}

Eigen::MatrixXd ConstraintOps::adjoint_inner_lowrank(
    const Eigen::VectorXd& y, const Eigen::MatrixXd& v) const {
  const Eigen::MatrixXd av = adjoint_matrix(y) * v;
  Eigen::MatrixXd out = v.transpose() * av;
  return 0.5 * (out + out.transpose());
}

// DiagonalOps

DiagonalOps::DiagonalOps(Eigen::Index n) : weights_(Eigen::VectorXd::Ones(n)) {}

Eigen::VectorXd DiagonalOps::primal_image_lowrank(
    const Eigen::MatrixXd& v, const Eigen::MatrixXd& s) const {
  check_lowrank(dim(), v, s);
  const Eigen::MatrixXd vs = v * s;
  return weights_.cwiseProduct(vs.cwiseProduct(v).rowwise().sum());
}

Eigen::VectorXd DiagonalOps::primal_image_dense(const Eigen::MatrixXd& x) const {
  if (x.rows() != dim() || x.cols() != dim()) {
    throw DimensionError("primal_image_dense: shape mismatch");
  }
  return weights_.cwiseProduct(x.diagonal());
}

SparseMat DiagonalOps::adjoint_matrix(const Eigen::VectorXd& y) const {
  if (y.size() != num_constraints()) {
    throw DimensionError("adjoint_matrix: y has wrong length");
  }
  SparseMat out(dim(), dim());
  out.reserve(Eigen::VectorXi::Constant(dim(), 1));
  for (Eigen::Index i = 0; i < dim(); ++i) {
    out.insert(i, i) = weights_(i) * y(i);
  }
  out.makeCompressed();
  return out;
}

Eigen::MatrixXd DiagonalOps::projected_rows(const Eigen::MatrixXd& v) const {
  if (v.rows() != dim()) throw DimensionError("projected_rows: shape mismatch");
  RowMajor g = RowMajor::Zero(dim(), svec_dim(v.cols()));
  for (Eigen::Index i = 0; i < dim(); ++i) {
    add_svec_outer(v.row(i), weights_(i), g.row(i));
  }
  return g;
}

Eigen::VectorXd DiagonalOps::row_norms() const { return weights_.cwiseAbs(); }

void DiagonalOps::scale_rows(const Eigen::VectorXd& factors) {
  if (factors.size() != weights_.size()) {
    throw DimensionError("scale_rows: wrong length");
  }
  weights_ = weights_.cwiseProduct(factors);
}

// SparseEntryOps

void SparseEntryOps::add_constraint(const std::vector<SymEntry>& entries) {
  for (SymEntry e : entries) {
    if (e.row < 0 || e.col < 0 || e.row >= n_ || e.col >= n_) {
      throw DimensionError("add_constraint: index out of range");
    }
    if (e.row < e.col) std::swap(e.row, e.col);
    entries_.push_back(e);
  }
  offsets_.push_back(static_cast<std::int64_t>(entries_.size()));
}

std::vector<SymEntry> SparseEntryOps::constraint(Eigen::Index i) const {
  return {entries_.begin() + offsets_[static_cast<size_t>(i)],
          entries_.begin() + offsets_[static_cast<size_t>(i) + 1]};
}

Eigen::VectorXd SparseEntryOps::primal_image_lowrank(
    const Eigen::MatrixXd& v, const Eigen::MatrixXd& s) const {
  check_lowrank(n_, v, s);
  const RowMajor vr = v;
  const RowMajor wr = v * s;
  const Eigen::Index m = num_constraints();
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double acc = 0.0;
    for (auto t = offsets_[static_cast<size_t>(i)];
         t < offsets_[static_cast<size_t>(i) + 1]; ++t) {
      const SymEntry& e = entries_[static_cast<size_t>(t)];
      const double x = wr.row(e.row).dot(vr.row(e.col));
      acc += (e.row == e.col ? 1.0 : 2.0) * e.value * x;
    }
    out(i) = acc;
  }
  return out;
}

Eigen::VectorXd SparseEntryOps::primal_image_dense(
    const Eigen::MatrixXd& x) const {
  if (x.rows() != n_ || x.cols() != n_) {
    throw DimensionError("primal_image_dense: shape mismatch");
  }
  const Eigen::Index m = num_constraints();
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double acc = 0.0;
    for (auto t = offsets_[static_cast<size_t>(i)];
         t < offsets_[static_cast<size_t>(i) + 1]; ++t) {
      const SymEntry& e = entries_[static_cast<size_t>(t)];
      acc += e.row == e.col ? e.value * x(e.row, e.col)
                            : e.value * (x(e.row, e.col) + x(e.col, e.row));
    }
    out(i) = acc;
  }
  return out;
}

SparseMat SparseEntryOps::adjoint_matrix(const Eigen::VectorXd& y) const {
  if (y.size() != num_constraints()) {
    throw DimensionError("adjoint_matrix: y has wrong length");
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * entries_.size());
  for (Eigen::Index i = 0; i < num_constraints(); ++i) {
    if (y(i) == 0.0) continue;
    for (auto t = offsets_[static_cast<size_t>(i)];
         t < offsets_[static_cast<size_t>(i) + 1]; ++t) {
      const SymEntry& e = entries_[static_cast<size_t>(t)];
      trip.emplace_back(e.row, e.col, y(i) * e.value);
      if (e.row != e.col) trip.emplace_back(e.col, e.row, y(i) * e.value);
    }
  }
  SparseMat out(n_, n_);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::MatrixXd SparseEntryOps::projected_rows(const Eigen::MatrixXd& v) const {
  if (v.rows() != n_) throw DimensionError("projected_rows: shape mismatch");
  const RowMajor vr = v;
  const Eigen::Index m = num_constraints();
  RowMajor g = RowMajor::Zero(m, svec_dim(v.cols()));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (auto t = offsets_[static_cast<size_t>(i)];
         t < offsets_[static_cast<size_t>(i) + 1]; ++t) {
      const SymEntry& e = entries_[static_cast<size_t>(t)];
      if (e.row == e.col) {
        add_svec_outer(vr.row(e.row), e.value, g.row(i));
      } else {
        add_svec_sym(vr.row(e.row), vr.row(e.col), e.value, g.row(i));
      }
    }
  }
  return g;
}

Eigen::VectorXd SparseEntryOps::row_norms() const {
  const Eigen::Index m = num_constraints();
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double acc = 0.0;
    for (auto t = offsets_[static_cast<size_t>(i)];
         t < offsets_[static_cast<size_t>(i) + 1]; ++t) {
      const SymEntry& e = entries_[static_cast<size_t>(t)];
      acc += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
    }
    out(i) = std::sqrt(acc);
  }
  return out;
}

void SparseEntryOps::scale_rows(const Eigen::VectorXd& factors) {
  if (factors.size() != num_constraints()) {
    throw DimensionError("scale_rows: wrong length");
  }
  for (Eigen::Index i = 0; i < num_constraints(); ++i) {
    for (auto t = offsets_[static_cast<size_t>(i)];
         t < offsets_[static_cast<size_t>(i) + 1]; ++t) {
      entries_[static_cast<size_t>(t)].value *= factors(i);
    }
  }
}

// Problem helpers

Eigen::Index SdpProblem::num_ineq() const {
  Eigen::Index c = 0;
  for (auto f : is_ineq) c += f ? 1 : 0;
  return c;
}

SparseMat Graph::laplacian() const {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * edges.size());
  for (const Edge& e : edges) {
    if (e.u == e.v) continue;
    trip.emplace_back(e.u, e.u, e.w);
    trip.emplace_back(e.v, e.v, e.w);
    trip.emplace_back(e.u, e.v, -e.w);
    trip.emplace_back(e.v, e.u, -e.w);
  }
  SparseMat l(n, n);
  l.setFromTriplets(trip.begin(), trip.end());
  return l;
}

double QapInstance::objective(const std::vector<int>& perm) const {
  const Eigen::Index n = size();
  if (static_cast<Eigen::Index>(perm.size()) != n) {
    throw DimensionError("QapInstance::objective: permutation length");
  }
  double acc = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index c = 0; c < n; ++c) {
      acc += w(a, c) * d(perm[static_cast<size_t>(a)], perm[static_cast<size_t>(c)]);
    }
  }
  return acc;
}

SdpProblem build_maxcut(const Graph& g) {
  if (g.n <= 0) throw ArgumentError("build_maxcut: empty graph");
  SdpProblem p;
  p.kind = ProblemKind::kMaxCut;
  const SparseMat c = 0.25 * g.laplacian();
  const double cnorm = c.norm();
  const double cost_scale = cnorm > 0.0 ? 1.0 / cnorm : 1.0;
  p.cost = cost_scale * c;
  p.ops = std::make_shared<DiagonalOps>(g.n);
  const double n = static_cast<double>(g.n);
  p.b = Eigen::VectorXd::Constant(g.n, 1.0 / n);
  p.is_ineq.assign(static_cast<size_t>(g.n), 0);
  p.scaling.cost_scale = cost_scale;
  p.scaling.trace_scale = n;
  p.scaling.row_scale = Eigen::VectorXd::Ones(g.n);
  for (std::int32_t i = 0; i < g.n; ++i) {
    p.keys.push_back({0, i, 0, 0, 0});
    p.primal_keys.push_back({0, i, 0, 0, 0});
  }
  return p;
}

SdpProblem build_qap(const QapInstance& q) {
  const Eigen::Index n = q.size();
  if (n <= 0 || q.w.cols() != n || q.d.rows() != n || q.d.cols() != n) {
    throw DimensionError("build_qap: W and D must be square and equal size");
  }
  if ((q.w - q.w.transpose()).norm() > 0.0 ||
      (q.d - q.d.transpose()).norm() > 0.0) {
    throw ArgumentError("build_qap: W and D must be symmetric");
  }
  const Eigen::Index dim = n * n + 1;
  const auto idx = [n](Eigen::Index a, Eigen::Index b) {
    return static_cast<std::int32_t>(1 + a + n * b);
  };
  const auto i32 = [](Eigen::Index v) { return static_cast<std::int32_t>(v); };

  SdpProblem p;
  p.kind = ProblemKind::kQap;

  // Cost: D kron W on the Y block.
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index b2 = 0; b2 < n; ++b2) {
      if (q.d(b, b2) == 0.0) continue;
      for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index a2 = 0; a2 < n; ++a2) {
          if (q.w(a, a2) == 0.0) continue;
          trip.emplace_back(idx(a, b), idx(a2, b2), q.d(b, b2) * q.w(a, a2));
        }
      }
    }
  }
  SparseMat c(dim, dim);
  c.setFromTriplets(trip.begin(), trip.end());
  const double cnorm = c.norm();
  const double cost_scale = -(cnorm > 0.0 ? 1.0 / cnorm : 1.0);
  p.cost = cost_scale * c;

  auto ops = std::make_shared<SparseEntryOps>(dim);
  std::vector<double> rhs;
  auto add = [&](const std::vector<SymEntry>& e, double bi, bool ineq,
                 ConstraintKey key) {
    ops->add_constraint(e);
    rhs.push_back(bi);
    p.is_ineq.push_back(ineq ? 1 : 0);
    p.keys.push_back(key);
  };

  // Partial trace over the outer (column-of-B) index equals I.
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index a2 = a; a2 < n; ++a2) {
      std::vector<SymEntry> e;
      for (Eigen::Index b = 0; b < n; ++b) {
        e.push_back({idx(a2, b), idx(a, b), a == a2 ? 1.0 : 0.5});
      }
      add(e, a == a2 ? 1.0 : 0.0, false, {0, i32(a), i32(a2), 0, 0});
    }
  }
  // Partial trace over the inner (row-of-B) index equals I.
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index b2 = b; b2 < n; ++b2) {
      std::vector<SymEntry> e;
      for (Eigen::Index a = 0; a < n; ++a) {
        e.push_back({idx(a, b2), idx(a, b), b == b2 ? 1.0 : 0.5});
      }
      add(e, b == b2 ? 1.0 : 0.0, false, {1, i32(b), i32(b2), 0, 0});
    }
  }
  // Nonnegativity of Y on the support of D kron W, one row per entry.
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b2 = 0; b2 < n; ++b2) {
        if (q.d(b, b2) == 0.0) continue;
        for (Eigen::Index a2 = 0; a2 < n; ++a2) {
          if (q.w(a, a2) == 0.0) continue;
          const bool diag = a == a2 && b == b2;
          add({{idx(a, b), idx(a2, b2), diag ? -1.0 : -0.5}}, 0.0, true,
              {2, i32(a), i32(b), i32(a2), i32(b2)});
        }
      }
    }
  }
  // vec(B) = diag(Y).
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) {
      add({{idx(a, b), 0, 0.5}, {idx(a, b), idx(a, b), -1.0}}, 0.0, false,
          {3, i32(a), i32(b), 0, 0});
    }
  }
  // B 1 = 1.
  for (Eigen::Index a = 0; a < n; ++a) {
    std::vector<SymEntry> e;
    for (Eigen::Index b = 0; b < n; ++b) e.push_back({idx(a, b), 0, 0.5});
    add(e, 1.0, false, {4, i32(a), 0, 0, 0});
  }
  // 1^T B = 1^T.
  for (Eigen::Index b = 0; b < n; ++b) {
    std::vector<SymEntry> e;
    for (Eigen::Index a = 0; a < n; ++a) e.push_back({idx(a, b), 0, 0.5});
    add(e, 1.0, false, {5, i32(b), 0, 0, 0});
  }
  // B >= 0.
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) {
      add({{idx(a, b), 0, -0.5}}, 0.0, true, {6, i32(a), i32(b), 0, 0});
    }
  }
  // X_11 = 1.
  add({{0, 0, 1.0}}, 1.0, false, {7, 0, 0, 0, 0});
  // tr(Y) = n.
  {
    std::vector<SymEntry> e;
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index a = 0; a < n; ++a) e.push_back({idx(a, b), idx(a, b), 1.0});
    }
    add(e, static_cast<double>(n), false, {8, 0, 0, 0, 0});
  }

  const Eigen::Index m = static_cast<Eigen::Index>(rhs.size());
  const Eigen::VectorXd unit = ops->row_norms().cwiseInverse();
  ops->scale_rows(unit);
  const double opnorm = estimate_op_norm(*ops);
  ops->scale_rows(Eigen::VectorXd::Constant(m, 1.0 / opnorm));

  const double trace_scale = static_cast<double>(n + 1);
  p.ops = ops;
  p.scaling.cost_scale = cost_scale;
  p.scaling.trace_scale = trace_scale;
  p.scaling.row_scale = unit / opnorm;
  p.b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), m)
            .cwiseProduct(p.scaling.row_scale) /
        trace_scale;

  p.primal_keys.push_back({1, 0, 0, 0, 0});
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) {
      p.primal_keys.push_back({0, i32(a), i32(b), 0, 0});
    }
  }
  return p;
}

Eigen::VectorXd proj_K(const SdpProblem& p, const Eigen::VectorXd& z) {
  if (z.size() != p.m()) throw DimensionError("proj_K: wrong length");
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out(i) = p.is_ineq[static_cast<size_t>(i)] ? std::min(z(i), p.b(i)) : p.b(i);
  }
  return out;
}

Eigen::VectorXd proj_N(const SdpProblem& p, const Eigen::VectorXd& v) {
  if (v.size() != p.m()) throw DimensionError("proj_N: wrong length");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out(i) = p.is_ineq[static_cast<size_t>(i)] ? std::max(v(i), 0.0) : 0.0;
  }
  return out;
}

double estimate_op_norm(const ConstraintOps& ops, double rel_tol, int max_iter) {
  const Eigen::Index m = ops.num_constraints();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(m) / std::sqrt(static_cast<double>(m));
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd adj = Eigen::MatrixXd(ops.adjoint_matrix(x));
    const Eigen::VectorXd ax = ops.primal_image_dense(adj);
    const double next = ax.norm();
    if (next == 0.0) return 0.0;
    x = ax / next;
    if (std::abs(next - lambda) <= rel_tol * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(lambda);
}

Eigen::MatrixXd partial_trace_outer(const Eigen::MatrixXd& y, Eigen::Index n1) {
  if (n1 <= 0 || y.rows() != y.cols() || y.rows() % n1 != 0) {
    throw DimensionError("partial_trace_outer: shape mismatch");
  }
  const Eigen::Index n2 = y.rows() / n1;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n2, n2);
  for (Eigen::Index b = 0; b < n1; ++b) out += y.block(b * n2, b * n2, n2, n2);
  return out;
}

Eigen::MatrixXd partial_trace_inner(const Eigen::MatrixXd& y, Eigen::Index n1) {
  if (n1 <= 0 || y.rows() != y.cols() || y.rows() % n1 != 0) {
    throw DimensionError("partial_trace_inner: shape mismatch");
  }
  const Eigen::Index n2 = y.rows() / n1;
  Eigen::MatrixXd out(n1, n1);
  for (Eigen::Index b = 0; b < n1; ++b) {
    for (Eigen::Index b2 = 0; b2 < n1; ++b2) {
      out(b, b2) = y.block(b * n2, b2 * n2, n2, n2).trace();
    }
  }
  return out;
}

}  // namespace usbs
