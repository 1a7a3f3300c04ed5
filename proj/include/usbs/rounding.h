#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "usbs/problem.h"

namespace usbs {

struct CutResult {
  std::vector<int> sides;  // +1 / -1 per vertex
  double value = 0.0;      // 1/4 x^T L x
  Eigen::Index column = -1;
};

/// Signs of every column of U (sgn(0) = +1) as cuts; the heaviest wins,
/// ties go to the first column.
CutResult maxcut_round(const Eigen::MatrixXd& u, const Graph& g);

/// Weight of the cut given by +1/-1 labels.
double cut_value(const Graph& g, const std::vector<int>& sides);

/// Minimum-cost perfect assignment of a square cost matrix; result[row] is
/// the assigned column. O(n^3) shortest augmenting paths; ties resolve to
/// the lowest column index.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

struct PermResult {
  std::vector<int> perm;  // a -> perm[a]
  double objective = 0.0;
  Eigen::Index column = -1;
};

/// For every column of U (and its negation): drop the homogenizing entry,
/// reshape to the n x n matrix B, take the permutation best aligned with B
/// and keep the one with the smallest tr(W P D P^T).
PermResult qap_round(const Eigen::MatrixXd& u, const QapInstance& q);

/// (upper - optimum) / optimum.
double relative_gap(double upper, double optimum);

/// Running minimum of relative gaps; empty until the first observation.
class BestGapTracker {
 public:
  void observe(double gap) {
    if (!best_ || gap < *best_) best_ = gap;
  }
  std::optional<double> best() const { return best_; }

 private:
  std::optional<double> best_;
};

}  // namespace usbs
