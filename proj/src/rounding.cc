#include "usbs/rounding.h"

#include <cmath>
#include <limits>

#include "usbs/errors.h"

namespace usbs {

double cut_value(const Graph& g, const std::vector<int>& sides) {
  double v = 0.0;
  for (const auto& e : g.edges) {
    if (sides[static_cast<size_t>(e.u)] != sides[static_cast<size_t>(e.v)]) {
      v += e.w;
    }
  }
  return v;
}

CutResult maxcut_round(const Eigen::MatrixXd& u, const Graph& g) {
  if (u.rows() != g.n) throw DimensionError("maxcut_round: U has wrong height");
  CutResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    std::vector<int> sides(static_cast<size_t>(g.n));
    for (Eigen::Index i = 0; i < g.n; ++i) {
      sides[static_cast<size_t>(i)] = u(i, j) >= 0.0 ? 1 : -1;
    }
    const double v = cut_value(g, sides);
    if (v > best.value) {
      best.value = v;
      best.sides = std::move(sides);
      best.column = j;
    }
  }
  return best;
}

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const Eigen::Index n = cost.rows();
  if (cost.cols() != n) throw DimensionError("hungarian: cost must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; match[j] is the row assigned to column j.
  std::vector<double> pu(static_cast<size_t>(n + 1), 0.0);
  std::vector<double> pv(static_cast<size_t>(n + 1), 0.0);
  std::vector<Eigen::Index> match(static_cast<size_t>(n + 1), 0);
  std::vector<Eigen::Index> way(static_cast<size_t>(n + 1), 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    match[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<size_t>(n + 1), false);
    do {
      used[static_cast<size_t>(j0)] = true;
      const Eigen::Index i0 = match[static_cast<size_t>(j0)];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - pu[static_cast<size_t>(i0)] -
                           pv[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          pu[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
          pv[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<size_t>(j0)] != 0);
    do {
      const Eigen::Index j1 = way[static_cast<size_t>(j0)];
      match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(static_cast<size_t>(n), -1);
  for (Eigen::Index j = 1; j <= n; ++j) {
    assign[static_cast<size_t>(match[static_cast<size_t>(j)] - 1)] =
        static_cast<int>(j - 1);
  }
  return assign;
}

PermResult qap_round(const Eigen::MatrixXd& u, const QapInstance& q) {
  const Eigen::Index n = q.size();
  if (u.rows() != n * n + 1) throw DimensionError("qap_round: U has wrong height");
  PermResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const Eigen::Map<const Eigen::MatrixXd> b(u.col(j).data() + 1, n, n);
    for (double sign : {1.0, -1.0}) {
      std::vector<int> perm = hungarian(-sign * b);
      const double obj = q.objective(perm);
      if (obj < best.objective) {
        best.objective = obj;
        best.perm = std::move(perm);
        best.column = j;
      }
    }
  }
  return best;
}

double relative_gap(double upper, double optimum) {
  if (optimum == 0.0) throw ArgumentError("relative_gap: optimum is zero");
  return (upper - optimum) / optimum;
}

}  // namespace usbs
