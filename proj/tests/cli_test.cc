#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"
#include "usbs/instance_io.h"

namespace usbs::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("usbs_cli_" + std::string(::testing::UnitTest::GetInstance()
                                          ->current_test_info()
                                          ->name()));
    fs::create_directories(dir_);
    write("k3.mtx",
          "%%MatrixMarket matrix coordinate pattern symmetric\n"
          "3 3 3\n2 1\n3 1\n3 2\n");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "usbs");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

TEST_F(CliTest, SolveWritesCsvAndConverges) {
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("k3.mtx")}), kConverged);
  const auto rows = lines(out_.str());
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], "iter,time_s,f_y,rel_subopt,rel_infeas,linf_infeas,dual_feas,step,rounded");
  EXPECT_EQ(rows[1].rfind("1,", 0), 0u);
  EXPECT_NE(err_.str().find("status: converged"), std::string::npos);
}

TEST_F(CliTest, RoundFlagFillsColumnAndReportsGap) {
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("k3.mtx"), "--round",
                     "--optimum", "2"}),
            kConverged);
  const auto rows = lines(out_.str());
  EXPECT_EQ(rows.back().substr(rows.back().rfind(',') + 1), "2");
  EXPECT_NE(err_.str().find("best rounded: 2"), std::string::npos);
  EXPECT_NE(err_.str().find("best relative gap: 0"), std::string::npos);
}

TEST_F(CliTest, BudgetExitCode) {
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("k3.mtx"), "--max-iters",
                     "1", "--eps", "1e-12"}),
            kBudget);
  EXPECT_NE(err_.str().find("iteration limit"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({}), kUsage);
  EXPECT_EQ(run_cli({"solve", "--problem", "tsp", "--input", path("k3.mtx")}), kUsage);
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("missing.mtx")}), kUsage);
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("k3.mtx"), "--rho", "-1"}),
            kUsage);
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("k3.mtx"), "--bogus"}),
            kUsage);
  EXPECT_EQ(run_cli({"--help"}), kConverged);
  EXPECT_NE(out_.str().find("solve"), std::string::npos);
}

TEST_F(CliTest, MalformedInstanceIsGenericError) {
  write("bad.mtx", "%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n2 1 1.0\n");
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("bad.mtx")}), kError);
  EXPECT_NE(err_.str().find("error"), std::string::npos);
}

TEST_F(CliTest, CommandLineOverridesConfigFile) {
  write("cfg.ini", "max-iters=1\neps=1e-12\n");
  EXPECT_EQ(run_cli({"solve", "--config", path("cfg.ini"), "--problem", "maxcut", "--input",
                     path("k3.mtx")}),
            kBudget);
  EXPECT_EQ(run_cli({"solve", "--config", path("cfg.ini"), "--problem", "maxcut", "--input",
                     path("k3.mtx"), "--eps", "1e-3", "--max-iters", "500"}),
            kConverged);
  write("bad.ini", "momentum=3\n");
  EXPECT_EQ(run_cli({"solve", "--config", path("bad.ini"), "--problem", "maxcut", "--input",
                     path("k3.mtx")}),
            kUsage);
  write("neg.ini", "rho=-1\n");
  EXPECT_EQ(run_cli({"solve", "--config", path("neg.ini"), "--problem", "maxcut", "--input",
                     path("k3.mtx")}),
            kUsage);
}

TEST_F(CliTest, OutFileAndSavedStateRoundTrip) {
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("k3.mtx"), "--out",
                     path("log.csv"), "--save-state", path("k3.state")}),
            kConverged);
  EXPECT_TRUE(out_.str().empty());
  std::ifstream log(path("log.csv"));
  std::string header;
  std::getline(log, header);
  EXPECT_EQ(header.rfind("iter,", 0), 0u);

  EXPECT_EQ(run_cli({"round", "--problem", "maxcut", "--input", path("k3.mtx"), "--state",
                     path("k3.state"), "--optimum", "2"}),
            kConverged);
  const auto rows = lines(out_.str());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "cut 2");
  EXPECT_EQ(rows[1], "relative_gap 0");
  EXPECT_EQ(rows[2].rfind("sides ", 0), 0u);

  // Resuming on the same instance is accepted.
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("k3.mtx"), "--warm-start",
                     path("k3.state")}),
            kConverged);
}

TEST_F(CliTest, FingerprintMismatchExitCode) {
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("k3.mtx"), "--save-state",
                     path("k3.state")}),
            kConverged);
  save_graph_mm(path("other.mtx"), oracle::random_graph(5, 0.6, 1));
  EXPECT_EQ(run_cli({"round", "--problem", "maxcut", "--input", path("other.mtx"), "--state",
                     path("k3.state")}),
            kFingerprint);
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("other.mtx"),
                     "--warm-start", path("k3.state")}),
            kFingerprint);
  EXPECT_NE(err_.str().find("fingerprint mismatch"), std::string::npos);
}

TEST_F(CliTest, PerturbThenWarmStartWithMapping) {
  save_graph_mm(path("g.mtx"), oracle::random_graph(40, 0.2, 5));
  EXPECT_EQ(run_cli({"perturb", "--problem", "maxcut", "--input", path("g.mtx"), "--fraction",
                     "0.05", "--out", path("sub.mtx"), "--mapping", path("sub.map")}),
            kConverged);
  EXPECT_NE(err_.str().find("kept 38 of 40"), std::string::npos);
  EXPECT_EQ(read_graph_mm(path("sub.mtx")).n, 38);
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("sub.mtx"), "--save-state",
                     path("sub.state")}),
            kConverged);
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("g.mtx"), "--warm-start",
                     path("sub.state"), "--mapping", path("sub.map")}),
            kConverged);
  // The mapping must describe the saved state.
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("k3.mtx"), "--save-state",
                     path("k3.state")}),
            kConverged);
  EXPECT_EQ(run_cli({"solve", "--problem", "maxcut", "--input", path("g.mtx"), "--warm-start",
                     path("k3.state"), "--mapping", path("sub.map")}),
            kFingerprint);
  EXPECT_EQ(run_cli({"perturb", "--problem", "maxcut", "--input", path("g.mtx"), "--fraction",
                     "1.5", "--out", path("x.mtx"), "--mapping", path("x.map")}),
            kUsage);
}

TEST_F(CliTest, QapSolveAndRoundPrintOneBasedPermutation) {
  write("q3.dat", "3\n\n0 1 2\n1 0 3\n2 3 0\n\n0 5 1\n5 0 2\n1 2 0\n");
  const QapInstance q = read_qaplib(path("q3.dat"));
  const double opt = oracle::brute_force_qap(q).second;
  EXPECT_NE(run_cli({"solve", "--problem", "qap", "--input", path("q3.dat"), "--round",
                     "--optimum", std::to_string(opt), "--max-iters", "200", "--save-state",
                     path("q3.state")}),
            kError);
  EXPECT_NE(err_.str().find("best relative gap"), std::string::npos);
  EXPECT_EQ(run_cli({"round", "--problem", "qap", "--input", path("q3.dat"), "--state",
                     path("q3.state")}),
            kConverged);
  const auto rows = lines(out_.str());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].rfind("objective ", 0), 0u);
  std::istringstream perm(rows[1].substr(std::string("permutation").size()));
  std::vector<int> p;
  for (int v; perm >> v;) p.push_back(v);
  std::sort(p.begin(), p.end());
  EXPECT_EQ(p, (std::vector<int>{1, 2, 3}));
}

}  // namespace
}  // namespace usbs::cli
