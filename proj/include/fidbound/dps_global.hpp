#pragma once

#include "fidbound/problems.hpp"
#include "fidbound/sdp.hpp"

#include <optional>
#include <vector>

namespace fidbound {

// Level-n relaxation parameters.  When `cuts` is unset the canonical set is
// used: transpose the last k copies of A for k = 1..n-1, plus B alone.
// Transposing a subset and its complement are equivalent for positivity, and
// copy-permutation symmetry collapses A-subsets to their size, so this set
// realizes every inequivalent partial transposition once.
struct HierarchyConfig {
  int level = 1;
  std::optional<std::vector<FactorSubset>> cuts;
  SolverSettings settings;
  int size_cap = 256;  // extension side d_a^n * d_b
};

struct BoundReport {
  int level = 0;
  double primal_value = 0.0;
  double dual_value = 0.0;
  // Rigorous upper bound on the estimation fidelity, valid whatever the
  // solver status (dual repair through certified_upper_bound).
  double certified_bound = 0.0;
  SolveStatus solver_status = SolveStatus::max_iterations;
  Residuals residuals;
  int iterations = 0;
  double wall_seconds = 0.0;
};

// Program over the extension Omega on (C^{d_a})^{(x)n} (x) C^{d_b}:
// maximize tr((rho (x) I over added copies) Omega) subject to Omega >= 0,
// invariance under permutations of the A copies (adjacent transpositions
// generate the rest), reduction tr over {B, copies 2..n} of Omega = I_{d_a},
// and one tied PSD block per configured partial-transpose cut.  Every block
// has exact trace d_a, recorded as its trace cap.
ConicProgram build_global_sdp(const EstimationProblem& problem,
                              const HierarchyConfig& config = {});

// Builds, solves, and repairs the level-n program into a certified bound.
BoundReport upper_bound(const EstimationProblem& problem,
                        const HierarchyConfig& config = {});

}  // namespace fidbound
