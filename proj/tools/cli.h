#pragma once

#include <iosfwd>

namespace usbs::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kConverged = 0,
  kError = 1,
  kBudget = 2,
  kUsage = 64,
  kFingerprint = 65,
};

/// Runs `usbs <solve|round|perturb> ...`. Iteration records go to `out`
/// (or the --out file), diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace usbs::cli
