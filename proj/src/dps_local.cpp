#include "fidbound/dps_local.hpp"

#include "hierarchy_rows.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <utility>

namespace fidbound {

namespace {

void check_bell_probs(const std::vector<double>& probs) {
  if (probs.size() != 4)
    throw ValidationError("Bell problem: needs exactly four probabilities");
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw ValidationError("Bell problem: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("Bell problem: probabilities sum to " +
                          std::to_string(total));
}

}  // namespace

EstimationProblem LocalEstimationProblem::to_estimation() const {
  return build_problem(ensemble);
}

LocalEstimationProblem build_local_problem(const Ensemble& ensemble,
                                           std::vector<int> party_dims) {
  ensemble.validate();
  if (ensemble.symbolic)
    throw ValidationError("build_local_problem: requires a finite ensemble");
  if (party_dims.empty())
    throw ValidationError("build_local_problem: no parties");
  int product = 1;
  for (int d : party_dims) {
    if (d < 1) throw ValidationError("build_local_problem: party dim < 1");
    product *= d;
  }
  if (product != ensemble.d_a)
    throw ValidationError("build_local_problem: encoded dimension " +
                          std::to_string(ensemble.d_a) +
                          " does not factor as the party product " +
                          std::to_string(product));

  const int d_c = ensemble.d_b;
  std::vector<int> joint_dims = party_dims;
  joint_dims.push_back(d_c);
  ComplexMatrix rho = ComplexMatrix::Zero(product * d_c, product * d_c);
  for (const EnsembleItem& item : ensemble.items)
    rho += item.prob * kron(item.encoded.with_dims(party_dims),
                            item.target.with_dims({d_c}))
                           .matrix();
  HermitianOperator joint(joint_dims, std::move(rho));
  if (min_eigenvalue(joint) < -1e-12)
    throw SolverError("build_local_problem: joint operator lost positivity");
  return LocalEstimationProblem{ensemble, std::move(party_dims), d_c,
                                std::move(joint)};
}

// Every inequivalent partial-transpose class: tuples (copies per party,
// include C) modulo the complement equivalence, represented by the variant
// transposing fewer factors (lexicographically smaller tuple on ties).
static std::vector<FactorSubset> default_local_cuts(int parties, int level) {
  std::set<std::vector<int>> chosen;
  std::vector<int> tuple(parties + 1, 0);
  while (true) {
    bool all_zero = true, all_full = true;
    for (int p = 0; p < parties; ++p) {
      all_zero = all_zero && tuple[p] == 0;
      all_full = all_full && tuple[p] == level;
    }
    all_zero = all_zero && tuple[parties] == 0;
    all_full = all_full && tuple[parties] == 1;
    if (!all_zero && !all_full) {
      std::vector<int> comp(parties + 1);
      for (int p = 0; p < parties; ++p) comp[p] = level - tuple[p];
      comp[parties] = 1 - tuple[parties];
      const int w = std::accumulate(tuple.begin(), tuple.end(), 0);
      const int wc = std::accumulate(comp.begin(), comp.end(), 0);
      chosen.insert(w < wc || (w == wc && tuple <= comp) ? tuple : comp);
    }
    int f = parties;
    while (f >= 0) {
      const int limit = (f == parties) ? 1 : level;
      if (++tuple[f] <= limit) break;
      tuple[f--] = 0;
    }
    if (f < 0) break;
  }

  std::vector<FactorSubset> cuts;
  for (const std::vector<int>& t : chosen) {
    std::vector<int> factors;
    for (int p = 0; p < parties; ++p)
      for (int f = level - t[p]; f < level; ++f)
        factors.push_back(p * level + f);
    if (t[parties]) factors.push_back(parties * level);
    cuts.push_back(FactorSubset(factors));
  }
  return cuts;
}

ConicProgram build_local_sdp(const LocalEstimationProblem& problem,
                             const HierarchyConfig& config) {
  const int n = config.level;
  if (n < 1) throw ValidationError("HierarchyConfig: level < 1");
  const int parties = static_cast<int>(problem.party_dims.size());
  const int d_c = problem.d_c;

  double side_check = d_c;
  for (int p = 0; p < parties; ++p)
    for (int c = 0; c < n; ++c) side_check *= problem.party_dims[p];
  if (side_check > config.size_cap)
    throw SizeCapError("build_local_sdp: extension side " +
                       std::to_string(static_cast<long>(side_check)) +
                       " exceeds cap " + std::to_string(config.size_cap));

  std::vector<int> ext_dims;
  for (int p = 0; p < parties; ++p)
    ext_dims.insert(ext_dims.end(), n, problem.party_dims[p]);
  ext_dims.push_back(d_c);

  ConicProgram program;
  const int main_block = program.add_block("extension", ext_dims);

  // Objective rho_abc (x) I over the added copies, copies grouped per party.
  HermitianOperator objective = problem.rho_abc;
  if (n > 1) {
    std::vector<int> pad;
    for (int p = 0; p < parties; ++p)
      pad.insert(pad.end(), n - 1, problem.party_dims[p]);
    objective = kron(objective, HermitianOperator::identity(pad));
    std::vector<int> order(parties * n + 1);
    for (int p = 0; p < parties; ++p) {
      order[p * n] = p;
      for (int j = 1; j < n; ++j)
        order[p * n + j] = parties + 1 + p * (n - 1) + (j - 1);
    }
    order[parties * n] = parties;
    objective = reorder_factors(objective, order);
  }
  program.objective.emplace_back(main_block, CoeffMatrix(objective.matrix()));

  std::vector<int> kept;
  for (int p = 0; p < parties; ++p) kept.push_back(p * n);
  detail::append_reduction_rows(main_block, ext_dims, kept,
                                program.equalities);

  std::vector<SignedPermutation> generators;
  for (int p = 0; p < parties; ++p)
    for (int t = 0; t + 1 < n; ++t)
      generators.push_back(conjugation_permutation(
          detail::swap_factors_sigma(ext_dims, p * n + t, p * n + t + 1)));
  detail::append_invariance_rows(main_block, ext_dims, generators,
                                 program.equalities);

  std::vector<FactorSubset> cuts;
  if (config.cuts) {
    cuts = *config.cuts;
    for (const FactorSubset& cut : cuts)
      cut.validate_for(parties * n + 1, "HierarchyConfig.cuts");
  } else {
    cuts = default_local_cuts(parties, n);
  }
  for (const FactorSubset& cut : cuts) {
    const int tied = program.add_block(detail::cut_name(cut), ext_dims);
    program.ties.push_back({tied, main_block, cut});
  }

  double cap = 1.0;
  for (int d : problem.party_dims) cap *= d;
  for (auto& entry : program.trace_caps) entry = cap;
  program.validate();
  return program;
}

BoundReport separable_upper_bound(const LocalEstimationProblem& problem,
                                  const HierarchyConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const ConicProgram program = build_local_sdp(problem, config);
  const Solution solution = solve(program, config.settings);

  BoundReport report;
  report.level = config.level;
  report.primal_value = solution.primal_value;
  report.dual_value = solution.dual_value;
  report.certified_bound = certified_upper_bound(program, solution);
  report.solver_status = solution.status;
  report.residuals = solution.residuals;
  report.iterations = solution.iterations;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

BellCertificate bell_dual_certificate(const std::vector<double>& probs) {
  check_bell_probs(probs);
  std::vector<double> sorted = probs;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const double lambda = sorted[2];  // third largest

  std::vector<double> lambdas(4, lambda);
  std::vector<double> mu(4);
  for (int j = 0; j < 4; ++j)
    mu[j] = std::max(lambda / 2.0, probs[j] - lambda / 2.0);
  const double bound = std::accumulate(mu.begin(), mu.end(), 0.0);

  const std::vector<HermitianOperator> psi = bell_states();
  ComplexMatrix witness = ComplexMatrix::Zero(16, 16);
  ComplexMatrix tilde = ComplexMatrix::Zero(4, 4);
  ComplexMatrix rho = ComplexMatrix::Zero(16, 16);
  for (int i = 0; i < 4; ++i) {
    witness += lambdas[i] * kron(psi[3 - i], psi[i].with_dims({4})).matrix();
    tilde += mu[i] * psi[i].matrix();
    rho += probs[i] * kron(psi[i], psi[i].with_dims({4})).matrix();
  }
  HermitianOperator witness_a({2, 2, 4}, std::move(witness));
  HermitianOperator rho_tilde({2, 2}, std::move(tilde));

  const HermitianOperator rho_abc({2, 2, 4}, std::move(rho));
  const ComplexMatrix slack =
      kron(rho_tilde, HermitianOperator::identity({4})).matrix() -
      partial_transpose(witness_a, FactorSubset{0}).matrix() -
      rho_abc.matrix();
  const double feasibility_slack = min_eigenvalue(slack);
  return BellCertificate{std::move(lambdas), std::move(mu),
                         std::move(witness_a), std::move(rho_tilde),
                         bound,               feasibility_slack};
}

Strategy bell_optimal_strategy(const std::vector<double>& probs) {
  check_bell_probs(probs);
  const double z_score =
      std::max(probs[0], probs[1]) + std::max(probs[2], probs[3]);
  const double x_score =
      std::max(probs[0], probs[2]) + std::max(probs[1], probs[3]);
  const bool use_x = x_score > z_score;  // Z preferred on ties

  const double s = 1.0 / std::sqrt(2.0);
  ComplexVector up(2), down(2), plus(2), minus(2);
  up << 1.0, 0.0;
  down << 0.0, 1.0;
  plus << s, s;
  minus << s, -s;

  // Guess index per outcome class: the more probable compatible Bell state,
  // lower index on ties.
  auto pick = [&](int i, int j) { return probs[j] > probs[i] ? j : i; };
  const std::vector<HermitianOperator> psi = bell_states();

  struct OutcomeSpec {
    const ComplexVector* a;
    const ComplexVector* b;
    int guess;
  };
  std::vector<OutcomeSpec> specs;
  if (use_x) {
    const int g_pp = pick(0, 2), g_pm = pick(1, 3);
    specs = {{&plus, &plus, g_pp},
             {&minus, &minus, g_pp},
             {&plus, &minus, g_pm},
             {&minus, &plus, g_pm}};
  } else {
    const int g_eq = pick(0, 1), g_neq = pick(2, 3);
    specs = {{&up, &up, g_eq},
             {&down, &down, g_eq},
             {&up, &down, g_neq},
             {&down, &up, g_neq}};
  }

  Strategy strategy;
  for (const OutcomeSpec& spec : specs) {
    ComplexVector ket(4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) ket(2 * i + j) = (*spec.a)(i) * (*spec.b)(j);
    strategy.outcomes.push_back(
        {ket * ket.adjoint(), psi[spec.guess].with_dims({4})});
  }
  return strategy;
}

}  // namespace fidbound
