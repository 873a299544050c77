#pragma once

#include "fidbound/dps_global.hpp"
#include "fidbound/problems.hpp"
#include "fidbound/sdp.hpp"

#include <vector>

namespace fidbound {

// Distributed variant: the encoded space is shared between parties (two in
// every exercised path, more supported structurally), the reference space C
// holds the targets, and strategies are relaxed to separable operators.
struct LocalEstimationProblem {
  Ensemble ensemble;
  std::vector<int> party_dims;  // product equals ensemble.d_a
  int d_c = 0;                  // equals ensemble.d_b
  // sum_i p_i encoded_i (x) target_i over dims (party_dims..., d_c)
  HermitianOperator rho_abc;

  EstimationProblem to_estimation() const;
};

// Splits the ensemble's encoded space across parties.  Throws when the
// encoded dimension does not factor as the product of `party_dims`.
LocalEstimationProblem build_local_problem(const Ensemble& ensemble,
                                           std::vector<int> party_dims);

// Level-n separable relaxation F_S^(n): the extension carries n copies of
// every party plus C, is permutation-invariant within each party's copies,
// reduces onto (first copies, traced C) to the identity, and satisfies the
// configured partial-transpose cuts (default: every inequivalent cut class;
// at n = 1 that is each single party and C alone).  Trace caps equal the
// product of the party dimensions.
ConicProgram build_local_sdp(const LocalEstimationProblem& problem,
                             const HierarchyConfig& config = {});

// Builds, solves, and repairs the level-n separable program.
BoundReport separable_upper_bound(const LocalEstimationProblem& problem,
                                  const HierarchyConfig& config = {});

// Closed-form dual certificate for the Bell-basis ensemble: witness
// A = sum_i lambda_i psi_{flip(i)} (x) psi_i with lambda_i equal to the
// third-largest probability, rho_tilde = sum_j mu_j psi_j with
// mu_j = max(lambda/2, p_j - lambda/2), bound = sum_j mu_j = p_a + p_b.
struct BellCertificate {
  std::vector<double> lambda;    // four entries
  std::vector<double> mu;        // four entries, input order
  HermitianOperator witness_a;   // dims {2, 2, 4}, PSD
  HermitianOperator rho_tilde;   // dims {2, 2}
  double bound = 0.0;
  // min eigenvalue of rho_tilde (x) I_C - witness_a^{T_A} - rho_ABC;
  // dual feasibility requires it to be >= -1e-10.
  double feasibility_slack = 0.0;
};

BellCertificate bell_dual_certificate(const std::vector<double>& probs);

// The attaining local strategy: both parties measure Z or both X (whichever
// class-max sum is larger, Z on ties) and guess the most probable Bell state
// compatible with the product outcome (lower index on ties).  Its average
// fidelity is p_a + p_b exactly.
Strategy bell_optimal_strategy(const std::vector<double>& probs);

}  // namespace fidbound
