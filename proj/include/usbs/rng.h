#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace usbs {

/// Portable Gaussian stream: std::mt19937_64 words turned into 53-bit
/// uniforms, then Box-Muller (cosine branch first, sine branch cached).
/// std::normal_distribution is implementation-defined, so it is avoided
/// wherever replay across platforms matters.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next();

  /// rows x cols matrix filled row by row, so a taller matrix drawn from
  /// the same seed shares its leading rows.
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols);

  Eigen::VectorXd vector(Eigen::Index n);

 private:
  double uniform_open();

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a base seed with a stream label (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t label);

}  // namespace usbs
