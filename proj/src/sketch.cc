#include "usbs/sketch.h"

#include <cmath>
#include <limits>

#include "usbs/errors.h"
#include "usbs/rng.h"
#include "usbs/symlin.h"

namespace usbs {

Eigen::MatrixXd sketch_test_matrix(Eigen::Index n, Eigen::Index r,
                                   std::uint64_t seed) {
  NormalStream rng(derive_seed(seed, 0x5053));
  return rng.matrix(n, r);
}

Eigen::MatrixXd NystromSketch::psi() const {
  if (psi_) return *psi_;
  return sketch_test_matrix(n_, r_, seed_);
}

NystromSketch NystromSketch::from_parts(std::uint64_t seed, Eigen::MatrixXd p,
                                        bool store_psi) {
  NystromSketch sk;
  sk.seed_ = seed;
  sk.n_ = p.rows();
  sk.r_ = p.cols();
  sk.p_ = std::move(p);
  if (store_psi) sk.psi_ = sketch_test_matrix(sk.n_, sk.r_, seed);
  return sk;
}

NystromSketch sketch_init(Eigen::Index n, Eigen::Index r, std::uint64_t seed,
                          bool store_psi) {
  if (r < 1 || r > n) {
    throw ArgumentError("sketch_init: rank " + std::to_string(r) +
                        " must lie in [1, " + std::to_string(n) + "]");
  }
  NystromSketch sk;
  sk.seed_ = seed;
  sk.n_ = n;
  sk.r_ = r;
  sk.p_ = Eigen::MatrixXd::Zero(n, r);
  if (store_psi) sk.psi_ = sketch_test_matrix(n, r, seed);
  return sk;
}

void sketch_update(NystromSketch& sk, double eta, const Eigen::MatrixXd& w,
                   const Eigen::VectorXd& lambda) {
  if (w.rows() != sk.n_ || w.cols() != lambda.size()) {
    throw DimensionError("sketch_update: shape mismatch");
  }
  if (sk.psi_) {
    sk.p_ = eta * sk.p_ + w * (lambda.asDiagonal() * (w.transpose() * *sk.psi_));
  } else {
    const Eigen::MatrixXd psi = sk.psi();
    sk.p_ = eta * sk.p_ + w * (lambda.asDiagonal() * (w.transpose() * psi));
  }
}

LowRankFactor nystrom_reconstruct(const Eigen::MatrixXd& psi,
                                  const Eigen::MatrixXd& p) {
  const Eigen::Index n = p.rows();
  LowRankFactor out;
  const double pnorm = p.norm();
  if (pnorm == 0.0) {
    out.u = orthonormalize(psi);
    out.lambda = Eigen::VectorXd::Zero(out.u.cols());
    return out;
  }
  double sigma = std::sqrt(static_cast<double>(n)) *
                 std::numeric_limits<double>::epsilon() * pnorm;
  for (int attempt = 0; attempt < 8; ++attempt, sigma *= 100.0) {
    const Eigen::MatrixXd y = p + sigma * psi;
    Eigen::MatrixXd b = psi.transpose() * y;
    b = 0.5 * (b + b.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) continue;
    // Y L^{-T}, with L L^T = B.
    const Eigen::MatrixXd f =
        llt.matrixL().solve(y.transpose()).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(f, Eigen::ComputeThinU);
    out.u = svd.matrixU();
    out.lambda = (svd.singularValues().array().square() - sigma)
                     .max(0.0)
                     .matrix();
    return out;
  }
  throw ConditioningError("reconstruct: Nystrom core is not positive definite");
}

LowRankFactor reconstruct(const NystromSketch& sk) {
  return nystrom_reconstruct(sk.psi(), sk.p());
}

}  // namespace usbs
