#include "fidbound/dps_global.hpp"

#include "hierarchy_rows.hpp"

#include <chrono>
#include <string>
#include <utility>

namespace fidbound {

ConicProgram build_global_sdp(const EstimationProblem& problem,
                              const HierarchyConfig& config) {
  const int n = config.level;
  if (n < 1) throw ValidationError("HierarchyConfig: level < 1");
  const int d_a = problem.ensemble.d_a;
  const int d_b = problem.ensemble.d_b;

  double side_check = d_b;
  for (int c = 0; c < n; ++c) side_check *= d_a;
  if (side_check > config.size_cap)
    throw SizeCapError("build_global_sdp: extension side " +
                       std::to_string(static_cast<long>(side_check)) +
                       " exceeds cap " + std::to_string(config.size_cap));

  std::vector<int> ext_dims(n, d_a);
  ext_dims.push_back(d_b);

  ConicProgram program;
  const int main_block = program.add_block("extension", ext_dims);

  // Objective rho (x) I over the added copies, copies between A and B.
  HermitianOperator objective = problem.rho.with_dims({d_a, d_b});
  if (n > 1) {
    std::vector<int> pad(n - 1, d_a);
    objective = kron(objective, HermitianOperator::identity(pad));
    std::vector<int> order(n + 1);
    order[0] = 0;
    for (int k = 1; k < n; ++k) order[k] = k + 1;
    order[n] = 1;
    objective = reorder_factors(objective, order);
  }
  program.objective.emplace_back(main_block, CoeffMatrix(objective.matrix()));

  detail::append_reduction_rows(main_block, ext_dims, {0},
                                program.equalities);

  std::vector<SignedPermutation> generators;
  for (int t = 0; t + 1 < n; ++t)
    generators.push_back(conjugation_permutation(
        detail::swap_factors_sigma(ext_dims, t, t + 1)));
  detail::append_invariance_rows(main_block, ext_dims, generators,
                                 program.equalities);

  std::vector<FactorSubset> cuts;
  if (config.cuts) {
    cuts = *config.cuts;
    for (const FactorSubset& cut : cuts)
      cut.validate_for(n + 1, "HierarchyConfig.cuts");
  } else {
    for (int k = 1; k < n; ++k) {
      std::vector<int> last;
      for (int f = n - k; f < n; ++f) last.push_back(f);
      cuts.push_back(FactorSubset(last));
    }
    cuts.push_back(FactorSubset{n});
  }
  for (const FactorSubset& cut : cuts) {
    const int tied = program.add_block(detail::cut_name(cut), ext_dims);
    program.ties.push_back({tied, main_block, cut});
  }

  for (auto& cap : program.trace_caps) cap = static_cast<double>(d_a);
  program.validate();
  return program;
}

BoundReport upper_bound(const EstimationProblem& problem,
                        const HierarchyConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const ConicProgram program = build_global_sdp(problem, config);
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

}  // namespace fidbound
