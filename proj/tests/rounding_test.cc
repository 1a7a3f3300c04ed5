#include "usbs/rounding.h"

#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "usbs/errors.h"

namespace usbs {
namespace {

double assignment_cost(const Eigen::MatrixXd& c, const std::vector<int>& a) {
  double v = 0.0;
  for (size_t i = 0; i < a.size(); ++i) v += c(static_cast<Eigen::Index>(i), a[i]);
  return v;
}

double brute_force_assignment(const Eigen::MatrixXd& c) {
  std::vector<int> perm(static_cast<size_t>(c.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, assignment_cost(c, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

bool is_permutation_of_range(std::vector<int> p) {
  std::sort(p.begin(), p.end());
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] != static_cast<int>(i)) return false;
  }
  return true;
}

// [1; vec(P)] with P(a, perm[a]) = 1, in the lifted index order 1 + a + n b.
Eigen::VectorXd lifted_assignment(const std::vector<int>& perm) {
  const auto n = static_cast<Eigen::Index>(perm.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n * n + 1);
  v(0) = 1.0;
  for (Eigen::Index a = 0; a < n; ++a) v(1 + a + n * perm[static_cast<size_t>(a)]) = 1.0;
  return v;
}

QapInstance random_qap(Eigen::Index n, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> u(0, 9);
  QapInstance q;
  q.w = Eigen::MatrixXd::Zero(n, n);
  q.d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      q.w(i, j) = q.w(j, i) = u(gen);
      q.d(i, j) = q.d(j, i) = u(gen);
    }
  }
  return q;
}

TEST(CutValue, Triangle) {
  Graph g;
  g.n = 3;
  g.edges = {{0, 1, 1.0}, {1, 2, 2.0}, {0, 2, 3.0}};
  EXPECT_EQ(cut_value(g, {1, 1, 1}), 0.0);
  EXPECT_EQ(cut_value(g, {1, -1, 1}), 3.0);
  EXPECT_EQ(cut_value(g, {1, 1, -1}), 5.0);
}

TEST(MaxCutRound, PicksHeaviestColumnAndMatchesLaplacianForm) {
  Graph g = oracle::random_graph(12, 0.5, 7, true);
  std::mt19937_64 gen(1);
  const Eigen::MatrixXd u = oracle::gaussian(12, 6, gen);
  const CutResult r = maxcut_round(u, g);
  const Eigen::MatrixXd lap = Eigen::MatrixXd(g.laplacian());
  double best = -1.0;
  Eigen::Index best_col = -1;
  for (Eigen::Index j = 0; j < 6; ++j) {
    Eigen::VectorXd x(12);
    for (Eigen::Index i = 0; i < 12; ++i) x(i) = u(i, j) >= 0.0 ? 1.0 : -1.0;
    const double v = 0.25 * x.dot(lap * x);
    if (v > best) {
      best = v;
      best_col = j;
    }
  }
  EXPECT_NEAR(r.value, best, 1e-12);
  EXPECT_EQ(r.column, best_col);
  EXPECT_NEAR(cut_value(g, r.sides), r.value, 1e-12);
  EXPECT_LE(r.value, oracle::brute_force_maxcut(g));
}

TEST(MaxCutRound, ExactVectorRecoversOptimalCut) {
  Graph g = oracle::random_graph(10, 0.5, 3, true);
  const double opt = oracle::brute_force_maxcut(g);
  // Search the labelling that attains the optimum and feed it as a column.
  for (std::uint64_t mask = 0; mask < 512; ++mask) {
    std::vector<int> sides(10);
    for (int i = 0; i < 10; ++i) sides[static_cast<size_t>(i)] = ((mask >> i) & 1U) ? -1 : 1;
    if (cut_value(g, sides) != opt) continue;
    Eigen::MatrixXd u(10, 1);
    for (int i = 0; i < 10; ++i) u(i, 0) = sides[static_cast<size_t>(i)] * 0.3;
    EXPECT_EQ(maxcut_round(u, g).value, opt);
    EXPECT_EQ(maxcut_round(-u, g).value, opt);
    return;
  }
  FAIL() << "no optimal labelling found";
}

TEST(MaxCutRound, ZeroEntriesGoToPlusSideAndTiesToFirstColumn) {
  Graph g;
  g.n = 2;
  g.edges = {{0, 1, 1.0}};
  Eigen::MatrixXd u(2, 3);
  u << 0.0, 1.0, 1.0,
       -1.0, -1.0, 1.0;
  const CutResult r = maxcut_round(u, g);
  EXPECT_EQ(r.sides[0], 1);
  EXPECT_EQ(r.sides[1], -1);
  EXPECT_EQ(r.column, 0);
  EXPECT_THROW(maxcut_round(Eigen::MatrixXd::Zero(3, 1), g), DimensionError);
}

TEST(Hungarian, MatchesBruteForce) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 1 + trial % 7;
    Eigen::MatrixXd c = oracle::gaussian(n, n, gen);
    if (trial % 3 == 0) c = c.array().round();
    const std::vector<int> a = hungarian(c);
    ASSERT_TRUE(is_permutation_of_range(a));
    EXPECT_NEAR(assignment_cost(c, a), brute_force_assignment(c), 1e-10);
  }
}

TEST(Hungarian, TiesAndErrors) {
  const std::vector<int> a = hungarian(Eigen::MatrixXd::Zero(4, 4));
  EXPECT_TRUE(is_permutation_of_range(a));
  EXPECT_EQ(hungarian(Eigen::MatrixXd::Zero(0, 0)).size(), 0u);
  EXPECT_THROW(hungarian(Eigen::MatrixXd::Zero(2, 3)), DimensionError);
}

TEST(QapRound, OptimalAssignmentRecoveredAtN3) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 10; ++trial) {
    const QapInstance q = random_qap(3, gen);
    const auto [perm, opt] = oracle::brute_force_qap(q);
    Eigen::MatrixXd u(10, 1);
    u.col(0) = lifted_assignment(perm).normalized();
    const PermResult r = qap_round(u, q);
    EXPECT_EQ(r.objective, opt);
    EXPECT_EQ(r.perm, perm);
    const PermResult neg = qap_round(-u, q);
    EXPECT_EQ(neg.objective, opt);
  }
}

TEST(QapRound, BestColumnAndValidPermutation) {
  std::mt19937_64 gen(4);
  const QapInstance q = random_qap(5, gen);
  const Eigen::MatrixXd u = oracle::gaussian(26, 4, gen);
  const PermResult r = qap_round(u, q);
  ASSERT_TRUE(is_permutation_of_range(r.perm));
  EXPECT_EQ(r.objective, q.objective(r.perm));
  EXPECT_GE(r.objective, oracle::brute_force_qap(q).second);
  for (Eigen::Index j = 0; j < 4; ++j) {
    EXPECT_LE(r.objective, qap_round(u.col(j), q).objective);
  }
  EXPECT_THROW(qap_round(Eigen::MatrixXd::Zero(25, 1), q), DimensionError);
}

TEST(RelativeGap, Definition) {
  EXPECT_DOUBLE_EQ(relative_gap(110.0, 100.0), 0.1);
  EXPECT_DOUBLE_EQ(relative_gap(100.0, 100.0), 0.0);
  EXPECT_THROW(relative_gap(1.0, 0.0), ArgumentError);
}

TEST(BestGapTracker, RunningMinimum) {
  BestGapTracker t;
  EXPECT_FALSE(t.best().has_value());
  t.observe(0.3);
  t.observe(0.5);
  EXPECT_EQ(*t.best(), 0.3);
  t.observe(0.1);
  EXPECT_EQ(*t.best(), 0.1);
}

}  // namespace
}  // namespace usbs
