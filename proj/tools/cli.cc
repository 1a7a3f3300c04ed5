#include "cli.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "usbs/bundle.h"
#include "usbs/errors.h"
#include "usbs/instance_io.h"
#include "usbs/rounding.h"
#include "usbs/state_io.h"

namespace usbs::cli {
namespace {

struct Instance {
  ProblemKind kind;
  Graph graph;
  QapInstance qap;
  SdpProblem problem;
};

ProblemKind parse_kind(const std::string& s) {
  return s == "qap" ? ProblemKind::kQap : ProblemKind::kMaxCut;
}

Instance load_instance(const std::string& kind, const std::string& path) {
  Instance inst;
  inst.kind = parse_kind(kind);
  if (inst.kind == ProblemKind::kMaxCut) {
    inst.graph = read_graph_mm(path);
    inst.problem = build_maxcut(inst.graph);
  } else {
    inst.qap = read_qaplib(path);
    inst.problem = build_qap(inst.qap);
  }
  return inst;
}

// Rounded objective of the current primal iterate, in instance units.
double round_state(const Instance& inst, const SolverState& st) {
  const LowRankFactor f = primal_factor(st, 10);
  if (inst.kind == ProblemKind::kMaxCut) return maxcut_round(f.u, inst.graph).value;
  return qap_round(f.u, inst.qap).objective;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct SolveArgs {
  std::string problem;
  std::string input;
  double rho = 0, beta = 0, eps = 0, max_time = 0, optimum = 0;
  int kc = 0, kp = 0, sketch_rank = 0, max_iters = 0;
  std::uint64_t seed = 0;
  std::string warm_start, mapping, save_state, out;
  bool round = false;
};

int cmd_solve(const SolveArgs& a, const CLI::App& app, std::ostream& out,
              std::ostream& err) {
  const Instance inst = load_instance(a.problem, a.input);
  const SdpProblem& p = inst.problem;
  SolverConfig cfg = default_config(inst.kind);
  const auto given = [&app](const char* name) {
    return app.get_option(name)->count() > 0;
  };
  if (given("--rho")) cfg.rho = a.rho;
  if (given("--beta")) cfg.beta = a.beta;
  if (given("--kc")) cfg.kc = a.kc;
  if (given("--kp")) cfg.kp = a.kp;
  if (given("--sketch-rank")) cfg.sketch_rank = a.sketch_rank;
  if (given("--eps")) cfg.eps = a.eps;
  if (given("--max-iters")) cfg.max_iters = a.max_iters;
  if (given("--max-time")) cfg.max_time = a.max_time;
  if (given("--seed")) cfg.seed = a.seed;

  std::unique_ptr<SolverState> init;
  if (!a.warm_start.empty()) {
    const SavedState saved = load_state(a.warm_start);
    if (!a.mapping.empty()) {
      const IndexMapping map = load_mapping(a.mapping);
      if (map.primal.size() != saved.fp.n || map.constraint.size() != saved.fp.m) {
        throw FingerprintMismatch("mapping does not match the saved state");
      }
      init = std::make_unique<SolverState>(
          warm_start_pad(saved.state, saved.scaling, p, map, cfg));
    } else {
      check_fingerprint(saved, p);
      init = std::make_unique<SolverState>(saved.state);
    }
  }

  std::ofstream file;
  std::ostream* csv = &out;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw ArgumentError("cannot write " + a.out);
    csv = &file;
  }
  *csv << "iter,time_s,f_y,rel_subopt,rel_infeas,linf_infeas,dual_feas,step,rounded\n";
  BestGapTracker gaps;
  double best_rounded = std::nan("");
  const bool minimize = inst.kind == ProblemKind::kQap;
  auto record = [&](const IterationInfo& info) {
    std::string rounded;
    if (a.round) {
      const double v = round_state(inst, *info.state);
      rounded = fmt(v);
      if (std::isnan(best_rounded) || (minimize ? v < best_rounded : v > best_rounded)) {
        best_rounded = v;
      }
      if (a.optimum != 0.0) {
        gaps.observe(minimize ? relative_gap(v, a.optimum)
                              : (a.optimum - v) / a.optimum);
      }
    }
    const Residuals& r = info.residuals;
    *csv << info.iteration << ',' << fmt(info.elapsed) << ','
         << fmt(info.state->f_y) << ',' << fmt(r.rel_subopt) << ','
         << fmt(r.rel_infeas) << ',' << fmt(r.linf_infeas) << ','
         << fmt(r.dual_feas) << ',' << (info.descent ? "descent" : "null") << ','
         << rounded << '\n';
  };

  const SolveResult res = usbs_solve(p, cfg, init.get(), record);
  csv->flush();
  if (!a.save_state.empty()) save_state(a.save_state, p, res.state);

  const char* status = res.status == SolveStatus::kConverged       ? "converged"
                       : res.status == SolveStatus::kTimeLimit     ? "time limit"
                                                                   : "iteration limit";
  err << "status: " << status << "\n"
      << "iterations: " << res.state.iteration
      << " (descent " << res.state.descent_steps << ", null "
      << res.state.null_steps << ")\n"
      << "objective: " << fmt(p.unscale_objective(res.state.x.stats.cost)) << "\n"
      << "dual bound: " << fmt(p.unscale_objective(res.state.f_y)) << "\n";
  if (a.round && !std::isnan(best_rounded)) {
    err << "best rounded: " << fmt(best_rounded) << "\n";
    if (gaps.best()) err << "best relative gap: " << fmt(*gaps.best()) << "\n";
  }
  return res.status == SolveStatus::kConverged ? kConverged : kBudget;
}

int cmd_round(const std::string& problem, const std::string& input,
              const std::string& state_path, double optimum, bool have_optimum,
              std::ostream& out) {
  const Instance inst = load_instance(problem, input);
  const SavedState saved = load_state(state_path);
  check_fingerprint(saved, inst.problem);
  const LowRankFactor f = primal_factor(saved.state, 10);
  if (inst.kind == ProblemKind::kMaxCut) {
    const CutResult c = maxcut_round(f.u, inst.graph);
    out << "cut " << fmt(c.value) << "\n";
    if (have_optimum) out << "relative_gap " << fmt((optimum - c.value) / optimum) << "\n";
    out << "sides";
    for (int s : c.sides) out << ' ' << s;
    out << "\n";
  } else {
    const PermResult r = qap_round(f.u, inst.qap);
    out << "objective " << fmt(r.objective) << "\n";
    if (have_optimum) out << "relative_gap " << fmt(relative_gap(r.objective, optimum)) << "\n";
    out << "permutation";
    for (int v : r.perm) out << ' ' << v + 1;
    out << "\n";
  }
  return kConverged;
}

int cmd_perturb(const std::string& problem, const std::string& input,
                double fraction, const std::string& out_path,
                const std::string& mapping_path, std::ostream& err) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ArgumentError("--fraction must lie in [0, 1)");
  }
  const Instance full = load_instance(problem, input);
  SdpProblem sub;
  if (full.kind == ProblemKind::kMaxCut) {
    const Graph& g = full.graph;
    const auto drop = static_cast<std::int64_t>(
        std::ceil(fraction * static_cast<double>(g.n)));
    Graph s;
    s.n = g.n - drop;
    if (s.n < 1) throw ArgumentError("perturb would remove every vertex");
    for (const auto& e : g.edges) {
      if (e.u < s.n && e.v < s.n) s.edges.push_back(e);
    }
    save_graph_mm(out_path, s);
    sub = build_maxcut(s);
    err << "kept " << s.n << " of " << g.n << " vertices\n";
  } else {
    const Eigen::Index n = full.qap.size();
    if (n < 2) throw ArgumentError("perturb needs a QAP of size >= 2");
    QapInstance s;
    s.w = full.qap.w.topLeftCorner(n - 1, n - 1);
    s.d = full.qap.d.topLeftCorner(n - 1, n - 1);
    save_qaplib(out_path, s);
    sub = build_qap(s);
    err << "kept size " << n - 1 << " of " << n << "\n";
  }
  save_mapping(mapping_path, derive_mapping(sub, full.problem));
  return kConverged;
}

// Fills options of `app` that were not given on the command line from a
// key=value file (keys are long option names without the dashes).
void apply_config(CLI::App& app, const std::string& path) {
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    const std::string key = item.fullname();
    if (key == "config") throw CLI::ValidationError("config", "a config file cannot nest");
    CLI::Option* opt = nullptr;
    try {
      opt = app.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw CLI::ValidationError(key, "unknown key in " + path);
    }
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral bundle solver for MaxCut and QAP relaxations"};
  app.require_subcommand(1);

  SolveArgs sa;
  CLI::App* solve = app.add_subcommand("solve", "solve a relaxation");
  std::string config_path;
  solve->add_option("--config", config_path, "key=value file; flags take precedence")
      ->check(CLI::ExistingFile);
  solve->add_option("--problem", sa.problem, "maxcut or qap")
      ->required()
      ->check(CLI::IsMember({"maxcut", "qap"}));
  solve->add_option("--input", sa.input, "instance file")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_option("--rho", sa.rho, "proximal weight")->check(CLI::PositiveNumber);
  solve->add_option("--beta", sa.beta, "descent parameter")->check(CLI::Range(0.0, 1.0));
  solve->add_option("--kc", sa.kc, "new eigenvectors per iteration")
      ->check(CLI::PositiveNumber);
  solve->add_option("--kp", sa.kp, "past directions kept")->check(CLI::NonNegativeNumber);
  solve->add_option("--sketch-rank", sa.sketch_rank, "Nystrom rank (0 = dense)")
      ->check(CLI::NonNegativeNumber);
  solve->add_option("--eps", sa.eps, "target relative accuracy")
      ->check(CLI::PositiveNumber);
  solve->add_option("--max-iters", sa.max_iters, "iteration budget")
      ->check(CLI::NonNegativeNumber);
  solve->add_option("--max-time", sa.max_time, "time budget in seconds")
      ->check(CLI::NonNegativeNumber);
  solve->add_option("--seed", sa.seed, "random seed");
  solve->add_option("--warm-start", sa.warm_start, "saved state")->check(CLI::ExistingFile);
  solve->add_option("--mapping", sa.mapping, "index mapping for a warm start")
      ->check(CLI::ExistingFile);
  solve->add_option("--save-state", sa.save_state, "write the final state here");
  solve->add_flag("--round", sa.round, "round the primal iterate every iteration");
  solve->add_option("--optimum", sa.optimum, "known optimum for gap reporting");
  solve->add_option("--out", sa.out, "CSV output (default stdout)");

  std::string r_problem, r_input, r_state;
  double r_optimum = 0.0;
  CLI::App* round = app.add_subcommand("round", "round a saved primal iterate");
  round->add_option("--problem", r_problem)->required()->check(CLI::IsMember({"maxcut", "qap"}));
  round->add_option("--input", r_input)->required()->check(CLI::ExistingFile);
  round->add_option("--state", r_state)->required()->check(CLI::ExistingFile);
  CLI::Option* r_opt = round->add_option("--optimum", r_optimum);

  std::string p_problem, p_input, p_out, p_mapping;
  double p_fraction = 0.01;
  CLI::App* perturb =
      app.add_subcommand("perturb", "write a smaller related instance and its mapping");
  perturb->add_option("--problem", p_problem)->required()->check(CLI::IsMember({"maxcut", "qap"}));
  perturb->add_option("--input", p_input)->required()->check(CLI::ExistingFile);
  perturb->add_option("--fraction", p_fraction, "fraction of vertices to drop");
  perturb->add_option("--out", p_out)->required();
  perturb->add_option("--mapping", p_mapping)->required();

  try {
    app.parse(argc, argv);
    if (solve->parsed() && !config_path.empty()) apply_config(*solve, config_path);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kConverged;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help();
    return kConverged;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(sa, *solve, out, err);
    if (round->parsed()) {
      return cmd_round(r_problem, r_input, r_state, r_optimum, r_opt->count() > 0, out);
    }
    return cmd_perturb(p_problem, p_input, p_fraction, p_out, p_mapping, err);
  } catch (const FingerprintMismatch& e) {
    err << "fingerprint mismatch: " << e.what() << "\n";
    return kFingerprint;
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

}  // namespace usbs::cli
