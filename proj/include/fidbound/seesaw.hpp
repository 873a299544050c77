#pragma once

#include "fidbound/problems.hpp"
#include "fidbound/sdp.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fidbound {

struct SeesawConfig {
  std::optional<int> outcomes;  // K; unset means the ensemble size
  int restarts = 10;
  int max_sweeps = 200;
  double improvement_tolerance = 1e-9;
  std::uint64_t seed = 0;
  SolverSettings settings;  // POVM-step solver
};

struct SeesawResult {
  Strategy strategy;
  double fidelity = 0.0;  // average_fidelity(strategy), recomputed on return
  int outcomes = 0;       // resolved K
  int best_restart = 0;   // lowest index attaining the best fidelity
  int sweeps = 0;         // full sweeps run by the winning restart
  bool converged = false; // improvement fell below tolerance before the cap
};

// One half-step: for fixed POVM the optimal guess of outcome x is the
// principal eigenvector of R_x = sum_i p_i tr(encoded_i M_x) target_i.
// Dead outcomes (R_x numerically zero) keep their previous guess.
std::vector<HermitianOperator> guess_update(const EstimationProblem& problem,
                                            const Strategy& strategy);

// Other half-step: for fixed guesses the optimal POVM maximizes
// sum_x tr(M_x G_x) with G_x = sum_i p_i tr(guess_x target_i) encoded_i,
// subject to completeness; solved as a conic program, then renormalized so
// the returned elements are PSD and sum to the identity to machine
// precision.
std::vector<ComplexMatrix> povm_update(const EstimationProblem& problem,
                                       const std::vector<HermitianOperator>& guesses,
                                       const SolverSettings& settings = {});

// Alternates the two half-steps from seeded random pure guesses, best of
// `restarts` independent runs (restart r draws from seed + r).  The adopted
// fidelity never decreases within a run; ties across restarts keep the
// lowest index.  Refuses symbolic ensembles.
SeesawResult seesaw_lower_bound(const EstimationProblem& problem,
                                const SeesawConfig& config = {});

}  // namespace fidbound
