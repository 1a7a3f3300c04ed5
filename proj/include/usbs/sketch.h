#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace usbs {

/// Randomized Nystrom sketch P = X Psi of a PSD matrix with a Gaussian test
/// matrix Psi (n x r). Psi is either stored or regenerated from its seed.
class NystromSketch {
 public:
  NystromSketch() = default;

  std::uint64_t seed() const { return seed_; }
  Eigen::Index dim() const { return n_; }
  Eigen::Index rank() const { return r_; }
  const Eigen::MatrixXd& p() const { return p_; }
  bool stores_psi() const { return psi_.has_value(); }

  /// Psi, regenerated when not stored.
  Eigen::MatrixXd psi() const;

  /// Restores a sketch from its serialized parts.
  static NystromSketch from_parts(std::uint64_t seed, Eigen::MatrixXd p,
                                  bool store_psi);

  friend NystromSketch sketch_init(Eigen::Index n, Eigen::Index r,
                                   std::uint64_t seed, bool store_psi);
  friend void sketch_update(NystromSketch& sk, double eta,
                            const Eigen::MatrixXd& w,
                            const Eigen::VectorXd& lambda);

 private:
  std::uint64_t seed_ = 0;
  Eigen::Index n_ = 0;
  Eigen::Index r_ = 0;
  Eigen::MatrixXd p_;
  std::optional<Eigen::MatrixXd> psi_;
};

/// Zero sketch of rank r for n x n matrices. Throws ArgumentError if r > n
/// or r < 1.
NystromSketch sketch_init(Eigen::Index n, Eigen::Index r, std::uint64_t seed,
                          bool store_psi = true);

/// Tracks X <- eta X + W diag(lambda) W^T:  P <- eta P + W diag(lambda) (W^T Psi).
void sketch_update(NystromSketch& sk, double eta, const Eigen::MatrixXd& w,
                   const Eigen::VectorXd& lambda);

/// Low-rank PSD factor X_hat = U diag(lambda) U^T.
struct LowRankFactor {
  Eigen::MatrixXd u;
  Eigen::VectorXd lambda;
};

/// Stable Nystrom reconstruction P (Psi^T P)^+ P^T using the shift
/// sigma = sqrt(n) eps ||P||_F, then removing the shift and clipping at 0.
LowRankFactor reconstruct(const NystromSketch& sk);

/// Same reconstruction for an externally supplied sketch pair.
LowRankFactor nystrom_reconstruct(const Eigen::MatrixXd& psi,
                                  const Eigen::MatrixXd& p);

/// Gaussian test matrix for (n, r, seed); rows are drawn in order, so the
/// leading rows do not depend on n.
Eigen::MatrixXd sketch_test_matrix(Eigen::Index n, Eigen::Index r,
                                   std::uint64_t seed);

}  // namespace usbs
