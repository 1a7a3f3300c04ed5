#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "usbs/bundle.h"
#include "usbs/problem.h"

namespace usbs {

/// Identity of a problem as far as warm starts are concerned.
struct Fingerprint {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::uint64_t num_ineq = 0;
  std::uint64_t b_hash = 0;  // FNV-1a over the little-endian bytes of b

  bool operator==(const Fingerprint&) const = default;
};

Fingerprint fingerprint(const SdpProblem& p);

struct SavedState {
  Fingerprint fp;
  Scaling scaling;
  SolverState state;
};

/// Binary layout (all integers u64 and all reals f64, little-endian):
///   "USBS" | u32 version | n m num_ineq b_hash
///   cost_scale trace_scale row_scale[m]
///   y[m] nu[m] f_y lambda_max_y | iteration descent null eig_calls
///   k V[n k] | Xbar: trace cost image[m] | X: trace cost image[m]
///   kx W[n kx] lambda[kx] | store flags (1 dense, 2 sketch)
///   [dense: Xbar[n n]] [sketch: seed r store_psi P[n r]]
/// Matrices are column-major.
void write_state(std::ostream& out, const SdpProblem& p, const SolverState& st);
SavedState read_state(std::istream& in);

void save_state(const std::string& path, const SdpProblem& p,
                const SolverState& st);
SavedState load_state(const std::string& path);

/// Throws FingerprintMismatch when the saved state belongs to another problem.
void check_fingerprint(const SavedState& s, const SdpProblem& p);

/// Text format: "usbs-mapping 1", then "primal <count>" followed by one
/// target index per line (-1 for none), then "constraints <count>" and the
/// same for constraints.
void write_mapping(std::ostream& out, const IndexMapping& map);
IndexMapping read_mapping(std::istream& in);
void save_mapping(const std::string& path, const IndexMapping& map);
IndexMapping load_mapping(const std::string& path);

}  // namespace usbs
