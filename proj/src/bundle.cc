#include "usbs/bundle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "usbs/errors.h"
#include "usbs/rng.h"
#include "usbs/symlin.h"

namespace usbs {
namespace {

struct BasisSizes {
  int kc;
  int kp;
};

BasisSizes basis_sizes(const SdpProblem& p, const SolverConfig& cfg) {
  const int n = static_cast<int>(p.n());
  BasisSizes s;
  s.kc = std::max(1, std::min(cfg.kc, n));
  s.kp = std::max(0, std::min(cfg.kp, n - s.kc));
  return s;
}

int sketch_rank(const SdpProblem& p, const SolverConfig& cfg) {
  if (cfg.sketch_rank == 0) return 0;
  int r = cfg.sketch_rank;
  if (r < 0) {
    r = p.kind == ProblemKind::kQap
            ? static_cast<int>(std::llround(std::sqrt(static_cast<double>(p.n() - 1))))
            : 10;
  }
  return std::max(1, std::min<int>(r, static_cast<int>(p.n())));
}

LanczosOptions next_lanczos(const SolverConfig& cfg, SolverState& st) {
  LanczosOptions o = cfg.lanczos;
  o.seed = derive_seed(cfg.seed, st.eig_calls++);
  return o;
}

// Appends unit vectors until the basis has `target` columns.
Eigen::MatrixXd complete_basis(const Eigen::MatrixXd& v, Eigen::Index target) {
  const Eigen::Index n = v.rows();
  target = std::min(target, n);
  Eigen::MatrixXd out = v;
  for (Eigen::Index i = 0; out.cols() < target && i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(i) = 1.0;
    for (int pass = 0; pass < 2; ++pass) e -= out * (out.transpose() * e);
    const double ne = e.norm();
    if (ne < 1e-6) continue;
    out.conservativeResize(Eigen::NoChange, out.cols() + 1);
    out.col(out.cols() - 1) = e / ne;
  }
  return out;
}

AggregateStats lowrank_stats(const SdpProblem& p, const Eigen::MatrixXd& w,
                             const Eigen::VectorXd& lambda) {
  AggregateStats s;
  const Eigen::MatrixXd cw = p.cost * w;
  s.trace = 0.0;
  s.cost = 0.0;
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    s.trace += lambda(j) * w.col(j).squaredNorm();
    s.cost += lambda(j) * w.col(j).dot(cw.col(j));
  }
  s.image = p.ops->primal_image_lowrank(w, lambda.asDiagonal().toDenseMatrix());
  return s;
}

// Makes the primal store match the configuration, converting if needed.
void ensure_store(const SdpProblem& p, const SolverConfig& cfg,
                  BundleModel& model) {
  const int r = sketch_rank(p, cfg);
  const bool want_sketch = r > 0;
  const bool want_dense = r == 0 || cfg.dense_shadow;
  const Eigen::Index n = p.n();
  PrimalStore& st = model.store;
  if (want_sketch && (!st.sketch || st.sketch->rank() != r ||
                      st.sketch->dim() != n)) {
    NystromSketch fresh = sketch_init(n, r, cfg.seed, cfg.store_psi);
    if (st.dense) {
      fresh = NystromSketch::from_parts(cfg.seed, *st.dense * fresh.psi(),
                                        cfg.store_psi);
    } else if (st.sketch && st.sketch->dim() == n) {
      const LowRankFactor f = reconstruct(*st.sketch);
      sketch_update(fresh, 0.0, f.u, f.lambda);
    }
    st.sketch = std::move(fresh);
  }
  if (want_dense && (!st.dense || st.dense->rows() != n)) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    if (st.sketch && st.sketch->dim() == n) {
      const LowRankFactor f = reconstruct(*st.sketch);
      d = f.u * f.lambda.asDiagonal() * f.u.transpose();
    }
    st.dense = std::move(d);
  }
  if (!want_sketch) st.sketch.reset();
  if (!want_dense) st.dense.reset();
}

}  // namespace

SolverConfig default_config(ProblemKind kind) {
  SolverConfig c;
  if (kind == ProblemKind::kQap) {
    c.rho = 0.005;
    c.beta = 0.25;
    c.kc = 2;
    c.kp = 0;
    c.sketch_rank = -1;
  }
  return c;
}

PenalizedValue penalized_obj(const SdpProblem& p, const Eigen::VectorXd& y,
                             int k, const LanczosOptions& opts) {
  if (y.size() != p.m()) throw DimensionError("penalized_obj: y has wrong length");
  PenalizedValue out;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (p.is_ineq[static_cast<size_t>(i)] && y(i) < 0.0) {
      out.feasible = false;
      out.f = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  const SparseMat m = p.cost - p.ops->adjoint_matrix(y);
  const EigResult eig = lanczos_top(make_operator(m), k, opts);
  out.lambda_max = eig.values(0);
  out.vectors = eig.vectors;
  out.f = p.alpha * std::max(out.lambda_max, 0.0) + p.b.dot(y);
  return out;
}

Eigen::VectorXd candidate_iterate(const SdpProblem& p, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& nu,
                                  const Eigen::VectorXd& image_x, double rho) {
  if (y.size() != p.m() || nu.size() != p.m() || image_x.size() != p.m()) {
    throw DimensionError("candidate_iterate: vector lengths differ");
  }
  Eigen::VectorXd out = y - (p.b - nu - image_x) / rho;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (p.is_ineq[static_cast<size_t>(i)]) out(i) = std::max(out(i), 0.0);
  }
  return out;
}

bool descent_test(double f_y, double f_cand, double model_val, double beta) {
  return beta * (f_y - model_val) <= f_y - f_cand;
}

PrimalIterate model_update(const SdpProblem& p, BundleModel& model, double eta,
                           const Eigen::MatrixXd& s,
                           const Eigen::MatrixXd& new_vectors, int kp,
                           const AggregateStats& x_stats) {
  const Eigen::MatrixXd& v = model.basis;
  const Eigen::Index k = v.cols();
  if (s.rows() != k || s.cols() != k || new_vectors.rows() != v.rows()) {
    throw DimensionError("model_update: shape mismatch");
  }
  const auto [lam, q] = small_eigh(s);
  const Eigen::Index np = std::min<Eigen::Index>(std::max(kp, 0), k);
  const Eigen::VectorXd lam_c = lam.tail(k - np).cwiseMax(0.0);
  const Eigen::MatrixXd w_c = v * q.rightCols(k - np);

  AggregateStats added = lowrank_stats(p, w_c, lam_c);
  model.xbar.trace = eta * model.xbar.trace + added.trace;
  model.xbar.cost = eta * model.xbar.cost + added.cost;
  model.xbar.image = eta * model.xbar.image + added.image;
  if (model.store.dense) {
    *model.store.dense = eta * *model.store.dense +
                         w_c * lam_c.asDiagonal() * w_c.transpose();
  }
  if (model.store.sketch) sketch_update(*model.store.sketch, eta, w_c, lam_c);

  PrimalIterate x;
  x.stats = x_stats;
  x.extra_w = v * q.leftCols(np);
  x.extra_lambda = lam.head(np).cwiseMax(0.0);

  const Eigen::Index target = np + new_vectors.cols();
  Eigen::MatrixXd stacked(v.rows(), target);
  stacked << x.extra_w, new_vectors;
  model.basis = complete_basis(orthonormalize(stacked), target);
  return x;
}

Residuals compute_residuals(const SdpProblem& p, const AggregateStats& x,
                            const Eigen::VectorXd& y, double f_y,
                            double lambda_max_y) {
  Residuals r;
  const Eigen::VectorXd diff = x.image - proj_K(p, x.image);
  r.rel_infeas = diff.norm() / (1.0 + p.b.norm());
  r.linf_infeas = diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
  r.rel_subopt = std::abs(f_y - x.cost) / (1.0 + std::abs(x.cost));
  r.dual_feas = lambda_max_y;
  r.gap = std::abs(p.b.dot(y) - x.cost);
  return r;
}

SolverState initial_state(const SdpProblem& p, const SolverConfig& cfg) {
  SolverState st;
  st.y = Eigen::VectorXd::Zero(p.m());
  st.nu = Eigen::VectorXd::Zero(p.m());
  st.model.xbar = AggregateStats::zero(p.m());
  st.x.stats = AggregateStats::zero(p.m());
  ensure_store(p, cfg, st.model);
  return st;
}

SolveResult usbs_solve(const SdpProblem& p, const SolverConfig& cfg,
                       const SolverState* init, const IterationCallback& cb) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  if (!(cfg.rho > 0.0) || !(cfg.beta > 0.0 && cfg.beta < 1.0)) {
    throw ArgumentError("usbs_solve: need rho > 0 and 0 < beta < 1");
  }
  const BasisSizes sizes = basis_sizes(p, cfg);

  SolveResult out;
  SolverState& st = out.state;
  if (init != nullptr) {
    st = *init;
    if (st.y.size() != p.m() || st.model.xbar.image.size() != p.m()) {
      throw DimensionError("usbs_solve: initial state does not fit the problem");
    }
    if (st.nu.size() != p.m()) st.nu = Eigen::VectorXd::Zero(p.m());
    if (st.x.stats.image.size() != p.m()) {
      st.x = PrimalIterate{st.model.xbar, {}, {}};
    }
    ensure_store(p, cfg, st.model);
  } else {
    st = initial_state(p, cfg);
  }

  {
    const PenalizedValue f0 =
        penalized_obj(p, st.y, sizes.kc + sizes.kp, next_lanczos(cfg, st));
    if (!f0.feasible) throw ArgumentError("usbs_solve: initial y outside Y");
    st.f_y = f0.f;
    st.lambda_max_y = f0.lambda_max;
    st.model.basis = complete_basis(orthonormalize(f0.vectors),
                                    sizes.kc + sizes.kp);
  }

  const auto elapsed = [&t0]() {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };

  for (int it = 0;; ++it) {
    if (it >= cfg.max_iters) {
      out.status = SolveStatus::kIterationLimit;
      break;
    }
    if (cfg.max_time > 0.0 && elapsed() >= cfg.max_time) {
      out.status = SolveStatus::kTimeLimit;
      break;
    }
    const ModelProjection mp = project_model(p, st.model.basis, st.model.xbar);
    const AltMaxResult alt = alternating_max(p, mp, st.y, cfg.rho, cfg.altmax, &st.nu);
    const Eigen::VectorXd cand =
        candidate_iterate(p, st.y, alt.nu, alt.x.image, cfg.rho);
    const PenalizedValue fc =
        penalized_obj(p, cand, sizes.kc, next_lanczos(cfg, st));
    const double model_cand = model_value(mp, p.b, cand, cfg.eval_ipm);

    IterationInfo info;
    info.f_y_prev = st.f_y;
    info.f_cand = fc.f;
    info.model_cand = model_cand;
    info.descent =
        fc.f < st.f_y && descent_test(st.f_y, fc.f, model_cand, cfg.beta);

    st.x = model_update(p, st.model, alt.eta, alt.s, fc.vectors, sizes.kp,
                        alt.x);
    st.nu = alt.nu;
    if (info.descent) {
      st.y = cand;
      st.f_y = fc.f;
      st.lambda_max_y = fc.lambda_max;
      ++st.descent_steps;
    } else {
      ++st.null_steps;
    }
    ++st.iteration;

    out.residuals =
        compute_residuals(p, st.x.stats, st.y, st.f_y, st.lambda_max_y);
    if (cb) {
      info.iteration = st.iteration;
      info.elapsed = elapsed();
      info.residuals = out.residuals;
      info.state = &st;
      info.candidate = &cand;
      info.altmax = &alt;
      info.projection = &mp;
      cb(info);
    }
    const Residuals& r = out.residuals;
    if (r.rel_subopt <= cfg.eps && r.rel_infeas <= cfg.eps &&
        (!cfg.linf_check || r.linf_infeas <= cfg.eps)) {
      out.status = SolveStatus::kConverged;
      break;
    }
  }
  out.elapsed = elapsed();
  return out;
}

Eigen::MatrixXd primal_dense(const SolverState& st) {
  if (!st.model.store.dense) {
    throw ArgumentError("primal_dense: the state keeps no dense primal");
  }
  Eigen::MatrixXd x = *st.model.store.dense;
  if (st.x.extra_w.cols() > 0) {
    x += st.x.extra_w * st.x.extra_lambda.asDiagonal() * st.x.extra_w.transpose();
  }
  return x;
}

LowRankFactor primal_factor(const SolverState& st, int rank) {
  const PrimalStore& store = st.model.store;
  if (store.sketch) {
    const NystromSketch& sk = *store.sketch;
    const Eigen::MatrixXd psi = sk.psi();
    Eigen::MatrixXd pm = sk.p();
    if (st.x.extra_w.cols() > 0) {
      pm += st.x.extra_w *
            (st.x.extra_lambda.asDiagonal() * (st.x.extra_w.transpose() * psi));
    }
    return nystrom_reconstruct(psi, pm);
  }
  const Eigen::MatrixXd x = primal_dense(st);
  const EigResult e = dense_top(
      x, rank > 0 ? std::min<int>(rank, static_cast<int>(x.rows()))
                  : static_cast<int>(x.rows()));
  LowRankFactor f;
  f.u = e.vectors;
  f.lambda = e.values.cwiseMax(0.0);
  return f;
}

IndexMapping derive_mapping(const SdpProblem& from, const SdpProblem& to) {
  IndexMapping map;
  std::map<ConstraintKey, std::int64_t> primal_to, cons_to;
  for (size_t i = 0; i < to.primal_keys.size(); ++i) {
    primal_to.emplace(to.primal_keys[i], static_cast<std::int64_t>(i));
  }
  for (size_t i = 0; i < to.keys.size(); ++i) {
    cons_to.emplace(to.keys[i], static_cast<std::int64_t>(i));
  }
  for (const auto& key : from.primal_keys) {
    const auto it = primal_to.find(key);
    map.primal.push_back(it == primal_to.end() ? -1 : it->second);
  }
  for (const auto& key : from.keys) {
    const auto it = cons_to.find(key);
    map.constraint.push_back(it == cons_to.end() ? -1 : it->second);
  }
  return map;
}

SolverState warm_start_pad(const SolverState& prev, const Scaling& from_scaling,
                           const SdpProblem& to, const IndexMapping& map,
                           const SolverConfig& cfg) {
  const Eigen::Index n_old = static_cast<Eigen::Index>(map.primal.size());
  const Eigen::Index m_old = static_cast<Eigen::Index>(map.constraint.size());
  if (prev.y.size() != m_old || from_scaling.row_scale.size() != m_old) {
    throw DimensionError("warm_start_pad: mapping does not fit the state");
  }
  SolverState st;
  const Scaling& ts = to.scaling;
  st.y = Eigen::VectorXd::Zero(to.m());
  st.nu = Eigen::VectorXd::Zero(to.m());
  for (Eigen::Index j = 0; j < m_old; ++j) {
    const std::int64_t jn = map.constraint[static_cast<size_t>(j)];
    if (jn < 0) continue;
    if (jn >= to.m()) throw DimensionError("warm_start_pad: constraint index");
    // A_scaled = row_scale A; C_scaled = cost_scale C; the dual of the
    // unscaled problem is y_i row_scale_i / cost_scale.
    const double y_orig = prev.y(j) * from_scaling.row_scale(j) /
                          from_scaling.cost_scale;
    st.y(jn) = y_orig * ts.cost_scale / ts.row_scale(jn);
    if (to.is_ineq[static_cast<size_t>(jn)] && st.y(jn) < 0.0) st.y(jn) = 0.0;
  }

  const LowRankFactor f = primal_factor(prev);
  if (f.u.rows() != n_old) {
    throw DimensionError("warm_start_pad: primal factor does not fit mapping");
  }
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(to.n(), f.u.cols());
  for (Eigen::Index i = 0; i < n_old; ++i) {
    const std::int64_t in = map.primal[static_cast<size_t>(i)];
    if (in < 0) continue;
    if (in >= to.n()) throw DimensionError("warm_start_pad: primal index");
    u.row(in) = f.u.row(i);
  }
  Eigen::VectorXd lambda =
      f.lambda * (from_scaling.trace_scale / ts.trace_scale);
  AggregateStats stats = lowrank_stats(to, u, lambda);
  if (stats.trace > to.alpha) {
    const double shrink = to.alpha / stats.trace;
    lambda *= shrink;
    stats.trace *= shrink;
    stats.cost *= shrink;
    stats.image *= shrink;
  }
  st.model.xbar = stats;
  st.x = PrimalIterate{stats, {}, {}};
  const int r = sketch_rank(to, cfg);
  if (r > 0) {
    st.model.store.sketch = sketch_init(to.n(), r, cfg.seed, cfg.store_psi);
    sketch_update(*st.model.store.sketch, 0.0, u, lambda);
  }
  if (r == 0 || cfg.dense_shadow) {
    st.model.store.dense = u * lambda.asDiagonal() * u.transpose();
  }
  return st;
}

}  // namespace usbs
