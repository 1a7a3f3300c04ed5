#include "usbs/subqp.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "usbs/errors.h"
#include "usbs/symlin.h"

namespace usbs {
namespace {

// Largest t with a + t d positive definite (infinity if unbounded), for
// a positive definite.
double psd_boundary(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return 0.0;
  const Eigen::MatrixXd linv_d =
      llt.matrixL().solve(llt.matrixL().solve(d).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (linv_d + linv_d.transpose()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  return lo < 0.0 ? -1.0 / lo : std::numeric_limits<double>::infinity();
}

double scalar_boundary(double x, double dx) {
  return dx < 0.0 ? -x / dx : std::numeric_limits<double>::infinity();
}

bool is_pd(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  return llt.info() == Eigen::Success;
}

IpmState step(const IpmState& st, const IpmDirection& d, double delta) {
  IpmState out = st;
  out.s = st.s + delta * d.ds;
  out.t = st.t + delta * d.dt;
  out.eta = st.eta + delta * d.deta;
  out.zeta = st.zeta + delta * d.dzeta;
  out.omega = st.omega + delta * d.domega;
  return out;
}

}  // namespace

ModelProjection project_model(const SdpProblem& p, const Eigen::MatrixXd& v,
                              const AggregateStats& xbar) {
  ModelProjection mp;
  mp.alpha = p.alpha;
  mp.basis = v;
  mp.g = p.ops->projected_rows(v);
  const Eigen::MatrixXd cv = p.cost * v;
  mp.vcv = svec(0.5 * (v.transpose() * cv + cv.transpose() * v));
  mp.trace = xbar.trace;
  mp.has_eta = xbar.trace > 0.0;
  if (mp.has_eta) {
    mp.a_unit = xbar.image / xbar.trace;
    mp.c_unit = xbar.cost / xbar.trace;
  } else {
    mp.a_unit = Eigen::VectorXd::Zero(p.m());
  }
  return mp;
}

QuadCoeffs QuadCoeffs::from_eval(const EvalCoeffs& e) {
  QuadCoeffs c;
  const Eigen::Index dim = e.g1.size();
  c.q11 = Eigen::MatrixXd::Zero(dim, dim);
  c.q12 = Eigen::VectorXd::Zero(dim);
  c.q22 = 0.0;
  c.h1 = e.g1;
  c.h2 = e.g2;
  c.has_eta = e.has_eta;
  return c;
}

EvalCoeffs assemble_eval_coeffs(const ModelProjection& mp,
                                const Eigen::VectorXd& y) {
  if (y.size() != mp.g.rows()) {
    throw DimensionError("assemble_eval_coeffs: y has wrong length");
  }
  EvalCoeffs e;
  e.g1 = mp.alpha * (mp.g.transpose() * y - mp.vcv);
  e.has_eta = mp.has_eta;
  e.g2 = mp.has_eta ? mp.alpha * (mp.a_unit.dot(y) - mp.c_unit) : 0.0;
  return e;
}

QuadCoeffs assemble_quad_coeffs(const ModelProjection& mp,
                                const Eigen::VectorXd& b,
                                const Eigen::VectorXd& y,
                                const Eigen::VectorXd& nu, double rho) {
  if (y.size() != mp.g.rows() || b.size() != y.size() || nu.size() != y.size()) {
    throw DimensionError("assemble_quad_coeffs: vector lengths differ");
  }
  if (!(rho > 0.0)) throw ArgumentError("assemble_quad_coeffs: rho must be > 0");
  const double a2r = mp.alpha * mp.alpha / rho;
  const Eigen::VectorXd z = y - (b - nu) / rho;
  QuadCoeffs c;
  c.q11 = a2r * (mp.g.transpose() * mp.g);
  c.h1 = mp.alpha * (mp.g.transpose() * z - mp.vcv);
  c.has_eta = mp.has_eta;
  if (mp.has_eta) {
    c.q12 = a2r * (mp.g.transpose() * mp.a_unit);
    c.q22 = a2r * mp.a_unit.squaredNorm();
    c.h2 = mp.alpha * (mp.a_unit.dot(z) - mp.c_unit);
  } else {
    c.q12 = Eigen::VectorXd::Zero(c.h1.size());
  }
  return c;
}

IpmState ipm_initial_state(Eigen::Index k, bool has_eta) {
  IpmState st;
  const double v = 1.0 / (2.0 * static_cast<double>(k + 2));
  st.s = v * Eigen::MatrixXd::Identity(k, k);
  st.t = Eigen::MatrixXd::Identity(k, k);
  st.eta = has_eta ? v : 0.0;
  st.zeta = has_eta ? 1.0 : 0.0;
  st.omega = 1.0;
  return st;
}

bool ipm_state_interior(const IpmState& st, Eigen::Index k, bool has_eta) {
  if (st.s.rows() != k || st.s.cols() != k || st.t.rows() != k ||
      st.t.cols() != k) {
    return false;
  }
  if (!st.s.allFinite() || !st.t.allFinite()) return false;
  if (has_eta && !(st.eta > 0.0 && st.zeta > 0.0)) return false;
  if (!has_eta && (st.eta != 0.0)) return false;
  return st.omega > 0.0 && st.slack() > 0.0 && is_pd(st.s) && is_pd(st.t);
}

std::pair<Eigen::VectorXd, double> ipm_stationarity(const QuadCoeffs& c,
                                                    const IpmState& st) {
  const Eigen::VectorXd s = svec(st.s);
  const Eigen::VectorXd v = svec(Eigen::MatrixXd::Identity(st.s.rows(), st.s.rows()));
  Eigen::VectorXd f1 = c.q11 * s + c.h1 - svec(st.t) + st.omega * v;
  double f2 = 0.0;
  if (c.has_eta) {
    f1 += st.eta * c.q12;
    f2 = c.q12.dot(s) + st.eta * c.q22 + c.h2 - st.zeta + st.omega;
  }
  return {f1, f2};
}

double quad_value(const QuadCoeffs& c, const Eigen::MatrixXd& s_mat,
                  double eta) {
  const Eigen::VectorXd s = svec(s_mat);
  double v = 0.5 * s.dot(c.q11 * s) + c.h1.dot(s);
  if (c.has_eta) {
    v += eta * c.q12.dot(s) + 0.5 * eta * eta * c.q22 + eta * c.h2;
  }
  return v;
}

IpmDirection newton_direction(const QuadCoeffs& c, const IpmState& st,
                              double mu) {
  const Eigen::Index k = st.s.rows();
  const Eigen::VectorXd v = svec(Eigen::MatrixXd::Identity(k, k));
  Eigen::LLT<Eigen::MatrixXd> s_llt(st.s);
  if (s_llt.info() != Eigen::Success) {
    throw ConditioningError("newton_direction: S is not positive definite");
  }
  const Eigen::MatrixXd s_inv = s_llt.solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd kron = symm_kron(st.t, s_inv);
  const auto [f1, f2] = ipm_stationarity(c, st);
  const double slack = st.slack();
  const double kappa1 = slack / st.omega;
  const double r3 = mu / st.omega - slack;
  const Eigen::VectorXd r4 = mu * svec(s_inv) - svec(st.t);

  IpmDirection d;
  Eigen::VectorXd ds;
  if (c.has_eta) {
    const double r5 = mu / st.eta - st.zeta;
    const double kappa2 = c.q22 + st.zeta / st.eta;
    const double den = kappa1 * kappa2 + 1.0;
    const Eigen::VectorXd& q = c.q12;
    Eigen::MatrixXd lhs = c.q11 + kron -
                          (kappa1 * q * q.transpose() + q * v.transpose() +
                           v * q.transpose() - kappa2 * v * v.transpose()) /
                              den;
    lhs = 0.5 * (lhs + lhs.transpose());
    const Eigen::VectorXd rhs = -f1 + r4 -
                                q * ((kappa1 * (r5 - f2) - r3) / den) -
                                v * ((r5 - f2 + kappa2 * r3) / den);
    ds = solve_spd(lhs, rhs);
    d.domega = (r5 - f2 + kappa2 * r3 - (q - kappa2 * v).dot(ds)) / den;
    d.deta = kappa1 * d.domega - v.dot(ds) - r3;
    d.dzeta = r5 - (st.zeta / st.eta) * d.deta;
  } else {
    Eigen::MatrixXd lhs = c.q11 + kron + v * v.transpose() / kappa1;
    lhs = 0.5 * (lhs + lhs.transpose());
    ds = solve_spd(lhs, -f1 + r4 - v * (r3 / kappa1));
    d.domega = (r3 + v.dot(ds)) / kappa1;
  }
  d.ds = svec_inv(ds);
  d.dt = svec_inv(r4 - kron * ds);
  return d;
}

double line_search_feasible(const IpmState& st, const IpmDirection& d,
                            bool has_eta, const IpmOptions& opts) {
  double bound = std::min(psd_boundary(st.s, d.ds), psd_boundary(st.t, d.dt));
  bound = std::min(bound, scalar_boundary(st.omega, d.domega));
  bound = std::min(bound, scalar_boundary(st.slack(), -d.ds.trace() - d.deta));
  if (has_eta) {
    bound = std::min(bound, scalar_boundary(st.eta, d.deta));
    bound = std::min(bound, scalar_boundary(st.zeta, d.dzeta));
  }
  double delta = std::min(1.0, opts.boundary_fraction * bound);
  while (delta >= opts.min_step) {
    const IpmState trial = step(st, d, delta);
    if (ipm_state_interior(trial, st.s.rows(), has_eta)) return delta;
    delta *= opts.backtrack;
  }
  throw StepFailure("line_search_feasible: step fell below minimum");
}

double complementarity(const IpmState& st, bool has_eta) {
  double c = (st.s.cwiseProduct(st.t)).sum() + st.omega * st.slack();
  if (has_eta) c += st.eta * st.zeta;
  return c;
}

double barrier_update(double mu_prev, const IpmState& st, double delta,
                      bool has_eta) {
  const double gamma = delta <= 0.2 ? 1.0 : 0.5 - 0.4 * delta * delta;
  const double blocks = static_cast<double>(st.s.rows() + (has_eta ? 2 : 1));
  return std::min(mu_prev, gamma * complementarity(st, has_eta) / (2.0 * blocks));
}

namespace {

IpmResult run_ipm(const QuadCoeffs& c, Eigen::Index k, const IpmState& start,
                  const IpmOptions& opts) {
  IpmResult r;
  r.state = start;
  const double blocks = static_cast<double>(k + (c.has_eta ? 2 : 1));
  double mu = complementarity(r.state, c.has_eta) / (2.0 * blocks);
  const double mu0 = mu;
  double res0 = -1.0;
  const double res_scale =
      opts.residual_tol * (1.0 + c.h1.norm() + std::abs(c.h2));
  for (;;) {
    const auto [f1, f2] = ipm_stationarity(c, r.state);
    const double res = f1.norm() + std::abs(f2);
    if (res0 < 0.0) res0 = res;
    if (mu < opts.mu_tol && res <= res_scale &&
        complementarity(r.state, c.has_eta) <= opts.gap_tol) {
      break;
    }
    if (r.iterations >= opts.max_iter) {
      r.inexact = true;
      break;
    }
    try {
      const IpmDirection d = newton_direction(c, r.state, mu);
      const double delta = line_search_feasible(r.state, d, c.has_eta, opts);
      r.state = step(r.state, d, delta);
      mu = barrier_update(mu, r.state, delta, c.has_eta);
      // Keep the barrier from outrunning the infeasibility: the stationarity
      // residual shrinks by (1 - delta) per step, and mu may not fall below
      // its share of the starting value.
      if (res0 > 0.0) {
        const auto [g1, g2] = ipm_stationarity(c, r.state);
        mu = std::max(mu, mu0 * (g1.norm() + std::abs(g2)) / res0);
      }
    } catch (const ConditioningError&) {
      r.inexact = true;
      break;
    } catch (const StepFailure&) {
      r.inexact = true;
      break;
    }
    ++r.iterations;
  }
  r.mu = mu;
  r.value = quad_value(c, r.state.s, r.state.eta);
  return r;
}

}  // namespace

IpmResult ipm_quad(const QuadCoeffs& c, const IpmState* warm,
                   const IpmOptions& opts) {
  const Eigen::Index dim = c.h1.size();
  const Eigen::Index k = static_cast<Eigen::Index>(
      std::llround((std::sqrt(8.0 * static_cast<double>(dim) + 1.0) - 1.0) / 2.0));
  if (svec_dim(k) != dim || c.q11.rows() != dim || c.q11.cols() != dim ||
      c.q12.size() != dim) {
    throw DimensionError("ipm_quad: coefficient shapes disagree");
  }
  const IpmState cold = ipm_initial_state(k, c.has_eta);
  if (warm == nullptr || !ipm_state_interior(*warm, k, c.has_eta)) {
    return run_ipm(c, k, cold, opts);
  }
  // A previous optimum sits on the boundary; pull it slightly toward the
  // cold start so Newton steps are not pinned there.
  const double th = opts.warm_blend;
  IpmState start;
  start.s = (1.0 - th) * warm->s + th * cold.s;
  start.t = (1.0 - th) * warm->t + th * cold.t;
  start.eta = (1.0 - th) * warm->eta + th * cold.eta;
  start.zeta = (1.0 - th) * warm->zeta + th * cold.zeta;
  start.omega = (1.0 - th) * warm->omega + th * cold.omega;
  IpmResult r = run_ipm(c, k, start, opts);
  if (r.inexact) {
    const int spent = r.iterations;
    r = run_ipm(c, k, cold, opts);
    r.iterations += spent;
  }
  return r;
}

IpmResult ipm_eval(const EvalCoeffs& c, const IpmOptions& opts) {
  return ipm_quad(QuadCoeffs::from_eval(c), nullptr, opts);
}

double eval_closed_form(const EvalCoeffs& c) {
  const auto [w, v] = small_eigh(svec_inv(c.g1));
  double best = std::min(0.0, w(w.size() - 1));
  if (c.has_eta) best = std::min(best, c.g2);
  return best;
}

double model_value(const ModelProjection& mp, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& y, const IpmOptions& opts) {
  const IpmResult r = ipm_eval(assemble_eval_coeffs(mp, y), opts);
  return -r.value + b.dot(y);
}

double psi_value(const Eigen::VectorXd& b, const Eigen::VectorXd& y,
                 double rho, double cost_x, const Eigen::VectorXd& image_x,
                 const Eigen::VectorXd& nu) {
  const Eigen::VectorXd r = b - nu - image_x;
  return cost_x + r.dot(y) - r.squaredNorm() / (2.0 * rho);
}

AltMaxResult alternating_max(const SdpProblem& p, const ModelProjection& mp,
                             const Eigen::VectorXd& y, double rho,
                             const AltMaxOptions& opts,
                             const Eigen::VectorXd* nu0) {
  const Eigen::Index m = p.m();
  const bool any_ineq = p.num_ineq() > 0;
  const double alpha = mp.alpha;
  const double tol = opts.tol * (1.0 + p.b.norm());
  AltMaxResult r;
  r.nu = Eigen::VectorXd::Zero(m);
  if (nu0 != nullptr) {
    if (nu0->size() != m) throw DimensionError("alternating_max: nu0 has wrong length");
    if (any_ineq) r.nu = proj_N(p, *nu0);
  }
  IpmState warm;
  bool have_warm = false;
  for (int pass = 0; pass < opts.max_passes; ++pass) {
    const QuadCoeffs c = assemble_quad_coeffs(mp, p.b, y, r.nu, rho);
    const IpmResult ipm = ipm_quad(c, have_warm ? &warm : nullptr, opts.ipm);
    r.ipm_iterations += ipm.iterations;
    r.inexact = r.inexact || ipm.inexact;
    warm = ipm.state;
    have_warm = true;
    ++r.passes;

    const Eigen::VectorXd s_n = svec(ipm.state.s);
    const double eta_n = mp.has_eta ? ipm.state.eta : 0.0;
    r.x.image = alpha * (mp.g * s_n);
    r.x.cost = alpha * mp.vcv.dot(s_n);
    r.x.trace = alpha * ipm.state.s.trace();
    if (mp.has_eta) {
      r.x.image += alpha * eta_n * mp.a_unit;
      r.x.cost += alpha * eta_n * mp.c_unit;
      r.x.trace += alpha * eta_n;
    }
    r.s = alpha * ipm.state.s;
    r.eta = mp.has_eta ? alpha * eta_n / mp.trace : 0.0;

    const Eigen::VectorXd nu_next = proj_N(p, p.b - r.x.image - rho * y);
    const double change = (nu_next - r.nu).norm();
    r.nu = nu_next;
    r.psi.push_back(psi_value(p.b, y, rho, r.x.cost, r.x.image, r.nu));
    if (!any_ineq || change <= tol) break;
  }
  return r;
}

}  // namespace usbs
