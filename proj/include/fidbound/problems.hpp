#pragma once

#include "fidbound/linalg.hpp"

#include <string>
#include <vector>

namespace fidbound {

// One hypothesis: with probability prob, the pure state `target` (reference
// space B) was drawn and `encoded` (input space A) is handed over.
struct EnsembleItem {
  double prob;
  HermitianOperator target;
  HermitianOperator encoded;
};

// Finite ensemble over a d_a-dimensional input and d_b-dimensional reference
// space.  A symbolic ensemble has no items; its problem operator is supplied
// directly by whichever family constructor created it.
struct Ensemble {
  std::vector<EnsembleItem> items;
  int d_a = 0;
  int d_b = 0;
  bool symbolic = false;

  // Probabilities positive and summing to 1 within 1e-9, targets pure and
  // encoded states PSD with unit trace within 1e-9, dimensions consistent.
  // Error messages name the offending item.
  void validate() const;
};

// Estimation instance: everything the bounds need is carried by the joint
// operator rho = sum_i p_i encoded_i (x) target_i on dims {d_a, d_b}.
struct EstimationProblem {
  Ensemble ensemble;
  HermitianOperator rho;
};

EstimationProblem build_problem(const Ensemble& ensemble);

// Measure-and-guess strategy: POVM outcome x (on the input space) triggers
// the pure guess of outcome x (on the reference space).
struct Strategy {
  struct Outcome {
    ComplexMatrix povm;
    HermitianOperator guess;
  };
  std::vector<Outcome> outcomes;

  void validate(int d_a, int d_b) const;
};

// sum_x M_x (x) guess_x; its trace over the guess factor is the identity.
HermitianOperator strategy_operator(const Strategy& strategy, int d_a, int d_b);

// Achieved average fidelity, computed both as tr(rho Lambda) and, for finite
// ensembles, as the double sum over items and outcomes; the two routes must
// agree within 1e-10.
double average_fidelity(const EstimationProblem& problem,
                        const Strategy& strategy);

// Projector onto a ket (normalized if within 1e-6 of unit norm).
HermitianOperator pure_projector(const ComplexVector& ket,
                                 std::vector<int> dims);

// Uniform-over-pure-states estimation family on C^d: symbolic ensemble with
// joint operator (I + V)/(d(d+1)).
EstimationProblem isotropic_problem(int d);

// One-parameter flip-symmetric strategy family
//   [(d - t) I + (d t - 1) V] / (d^2 - 1),      -1 <= t <= 1,
// normalized so its trace over the guess factor is the identity.
HermitianOperator werner_operator(int d, double t);

// (|00> + |11>)/sqrt2, (|00> - |11>)/sqrt2, (|01> + |10>)/sqrt2,
// (|01> - |10>)/sqrt2 as projectors with dims {2, 2}.
std::vector<HermitianOperator> bell_states();

// Targets are the classical labels |i><i| on C^K.
EstimationProblem discrimination_problem(
    const std::vector<double>& probs,
    const std::vector<HermitianOperator>& encoded);

// Two equiprobable pure states with real inner product `overlap`.
EstimationProblem two_pure_problem(double overlap);

// Each target state arrives as `copies` tensor-power copies.  Throws
// SizeCapError when d^copies exceeds size_cap.
EstimationProblem copies_problem(const std::vector<HermitianOperator>& states,
                                 const std::vector<double>& probs, int copies,
                                 int size_cap = 256);

// Bell-basis discrimination ensemble: encoded and target are both psi_i,
// with the encoded side carrying the 2 (x) 2 split.
Ensemble bell_ensemble(const std::vector<double>& probs);

// The nine-state product basis of C^3 (x) C^3 whose members are pairwise
// orthogonal yet not locally distinguishable, with uniform probabilities.
Ensemble domino_ensemble();

}  // namespace fidbound
