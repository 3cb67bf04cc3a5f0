#ifndef SPMCSR_VERIFY_HPP
#define SPMCSR_VERIFY_HPP

// Randomized self-checks of the library's algebraic properties, run by
// `spmcsr verify` and by the acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

namespace spmcsr::verify {

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  int trials = 0;
  bool passed = false;
};

/// <A x, y> == <x, A^T y> for S, W (bilinear and bicubic), K, the SPMC layer
/// and the normal-equations operator, on random 8x8 instances.
std::vector<CheckResult> adjoint_suite(std::uint64_t seed, int trials);

/// SPMC image and flow sensitivities against central finite differences on
/// random 6x6 instances with flows kept 1e-2 away from kernel kinks.
std::vector<CheckResult> gradcheck_suite(std::uint64_t seed, int trials);

/// Exact-cover shift-and-add recovery at alpha 2 (4 frames) and alpha 4
/// (16 frames) on random 64x64 textures.
std::vector<CheckResult> recovery_suite(std::uint64_t seed, int trials);

/// Bitwise identities: SPMC with zero flow equals zero-upsampling, SPMC at
/// alpha 1 equals the forward warp.
std::vector<CheckResult> equivalence_suite(std::uint64_t seed, int trials);

/// "adjoint", "gradcheck", "recovery", "equivalence" or "all".
std::vector<CheckResult> run_suite(const std::string &name, std::uint64_t seed, int trials);

/// max|a - f| / max(max|a|, max|f|), 0 when both vanish.
double relative_error(const double *a, const double *f, long n);

}  // namespace spmcsr::verify

#endif  // SPMCSR_VERIFY_HPP
