#pragma once

// Finite-difference consistency checks of the analytic update directions.

#include <cstdint>
#include <string>
#include <vector>

namespace born_psa {

struct GradcheckResult {
  std::string name;
  int cases = 0;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Runs every check on `cases` seeded random instances (central differences, h = 1e-5):
///  - mho_square:   K = N MHO increment vs -1/4 grad of (x^T x - y^T y)^2
///  - mho_compress: K > N MHO increment vs the same gradient with each column
///                  projected onto its unit-sphere tangent (g_n - w_n w_n^T g_n)
///  - entropy:      analytic grad of sum q_n log(1/q_n) vs finite differences
///  - qvar_factor:  (p - q) factor vs 1/2 of -d/dq (p - q)^2
std::vector<GradcheckResult> run_gradchecks(std::uint64_t seed = 2024, int cases = 100);

}  // namespace born_psa
