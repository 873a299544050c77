#include "fidbound/seesaw.hpp"

#include "fidbound/svec.hpp"

#include <cmath>
#include <random>
#include <string>
#include <utility>

namespace fidbound {

namespace {

void require_finite(const EstimationProblem& problem, const char* who) {
  if (problem.ensemble.symbolic || problem.ensemble.items.empty())
    throw ValidationError(std::string(who) +
                          ": symbolic ensemble carries no item list; supply "
                          "a finite ensemble");
}

// PSD square root inverse with eigenvalues clamped away from zero; the
// argument is the near-identity POVM sum, so the clamp never bites in
// practice.
ComplexMatrix inverse_sqrt(const ComplexMatrix& psd) {
  const EigResult eig = hermitian_eig(
      HermitianOperator({static_cast<int>(psd.rows())}, psd));
  RealVector scaled = eig.eigenvalues;
  for (int i = 0; i < scaled.size(); ++i)
    scaled(i) = 1.0 / std::sqrt(std::max(scaled(i), 1e-12));
  return eig.eigenvectors * scaled.asDiagonal() *
         eig.eigenvectors.adjoint();
}

ComplexMatrix clip_negative(const ComplexMatrix& hermitian) {
  const EigResult eig = hermitian_eig(
      HermitianOperator({static_cast<int>(hermitian.rows())}, hermitian));
  RealVector clipped = eig.eigenvalues.cwiseMax(0.0);
  return eig.eigenvectors * clipped.asDiagonal() * eig.eigenvectors.adjoint();
}

Strategy assemble(const std::vector<ComplexMatrix>& povm,
                  const std::vector<HermitianOperator>& guesses) {
  Strategy strategy;
  for (size_t x = 0; x < povm.size(); ++x)
    strategy.outcomes.push_back({povm[x], guesses[x]});
  return strategy;
}

}  // namespace

std::vector<HermitianOperator> guess_update(const EstimationProblem& problem,
                                            const Strategy& strategy) {
  require_finite(problem, "guess_update");
  const int d_b = problem.ensemble.d_b;
  std::vector<HermitianOperator> guesses;
  for (const Strategy::Outcome& out : strategy.outcomes) {
    ComplexMatrix r = ComplexMatrix::Zero(d_b, d_b);
    for (const EnsembleItem& item : problem.ensemble.items)
      r += item.prob * trace_product(item.encoded.matrix(), out.povm) *
           item.target.matrix();
    if (r.norm() < 1e-14) {
      guesses.push_back(out.guess);  // dead outcome
      continue;
    }
    const EigResult eig = hermitian_eig(HermitianOperator({d_b}, r));
    const ComplexVector top = eig.eigenvectors.col(d_b - 1);
    guesses.push_back(pure_projector(top, {d_b}));
  }
  return guesses;
}

std::vector<ComplexMatrix> povm_update(
    const EstimationProblem& problem,
    const std::vector<HermitianOperator>& guesses,
    const SolverSettings& settings) {
  require_finite(problem, "povm_update");
  const int d_a = problem.ensemble.d_a;
  const int k = static_cast<int>(guesses.size());
  if (k < 1) throw ValidationError("povm_update: no guesses");
  if (k == 1)  // completeness forces the only element
    return {ComplexMatrix::Identity(d_a, d_a)};

  ConicProgram program;
  for (int x = 0; x < k; ++x)
    program.add_block("povm_" + std::to_string(x), {d_a});
  for (int x = 0; x < k; ++x) {
    ComplexMatrix g = ComplexMatrix::Zero(d_a, d_a);
    for (const EnsembleItem& item : problem.ensemble.items)
      g += item.prob *
           trace_product(guesses[x].matrix(), item.target.matrix()) *
           item.encoded.matrix();
    program.objective.emplace_back(x, CoeffMatrix(g));
  }
  const SvecLayout layout(d_a);
  for (int alpha = 0; alpha < layout.size(); ++alpha) {
    const ComplexMatrix f = layout.basis_element(alpha);
    Equality eq;
    for (int x = 0; x < k; ++x) eq.terms.emplace_back(x, CoeffMatrix(f));
    eq.rhs = f.trace().real();
    program.equalities.push_back(std::move(eq));
  }
  program.validate();

  const Solution solution = solve(program, settings);
  if (solution.status == SolveStatus::infeasible_detected ||
      solution.status == SolveStatus::unbounded_detected)
    throw SolverError("povm_update: completeness program reported " +
                      to_string(solution.status));

  // Repair to an exact POVM: clip each block to the PSD cone, then
  // renormalize by the inverse square root of the sum.
  std::vector<ComplexMatrix> povm;
  ComplexMatrix total = ComplexMatrix::Zero(d_a, d_a);
  for (int x = 0; x < k; ++x) {
    ComplexMatrix m = clip_negative(
        0.5 * (solution.primal_blocks[x] +
               solution.primal_blocks[x].adjoint()));
    total += m;
    povm.push_back(std::move(m));
  }
  const ComplexMatrix w = inverse_sqrt(total);
  for (ComplexMatrix& m : povm) m = w * m * w;
  return povm;
}

SeesawResult seesaw_lower_bound(const EstimationProblem& problem,
                                const SeesawConfig& config) {
  require_finite(problem, "seesaw_lower_bound");
  if (config.restarts < 1)
    throw ValidationError("SeesawConfig: restarts < 1");
  if (config.max_sweeps < 1)
    throw ValidationError("SeesawConfig: max_sweeps < 1");
  if (config.improvement_tolerance <= 0.0)
    throw ValidationError("SeesawConfig: improvement_tolerance <= 0");
  if (config.outcomes && *config.outcomes < 1)
    throw ValidationError("SeesawConfig: outcomes < 1");

  const int k = config.outcomes
                    ? *config.outcomes
                    : static_cast<int>(problem.ensemble.items.size());
  const int d_b = problem.ensemble.d_b;

  std::optional<SeesawResult> best;
  for (int restart = 0; restart < config.restarts; ++restart) {
    std::mt19937_64 rng(config.seed + static_cast<std::uint64_t>(restart));
    std::normal_distribution<double> gauss;

    std::vector<HermitianOperator> guesses;
    for (int x = 0; x < k; ++x) {
      ComplexVector ket(d_b);
      for (int c = 0; c < d_b; ++c) ket(c) = Complex(gauss(rng), gauss(rng));
      ket /= ket.norm();
      guesses.push_back(pure_projector(ket, {d_b}));
    }

    Strategy strategy =
        assemble(povm_update(problem, guesses, config.settings), guesses);
    double fidelity = average_fidelity(problem, strategy);

    int sweeps = 0;
    bool converged = false;
    while (sweeps < config.max_sweeps) {
      ++sweeps;
      std::vector<HermitianOperator> next_guesses =
          guess_update(problem, strategy);
      Strategy candidate = assemble(
          povm_update(problem, next_guesses, config.settings), next_guesses);
      const double value = average_fidelity(problem, candidate);
      if (value <= fidelity) {  // numerically stalled; never regress
        converged = true;
        break;
      }
      const double improvement = value - fidelity;
      strategy = std::move(candidate);
      fidelity = value;
      if (improvement < config.improvement_tolerance) {
        converged = true;
        break;
      }
    }

    if (!best || fidelity > best->fidelity) {
      best = SeesawResult{std::move(strategy), fidelity, k,
                          restart,             sweeps,   converged};
    }
  }

  best->fidelity = average_fidelity(problem, best->strategy);
  return *best;
}

}  // namespace fidbound
