#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fidbound/dps_global.hpp"
#include "support/oracles.hpp"

#include <cstring>
#include <random>
#include <vector>

using namespace fidbound;

namespace {

EstimationProblem random_qubit_discrimination(std::mt19937_64& rng, int k) {
  std::vector<HermitianOperator> encoded;
  for (int i = 0; i < k; ++i)
    encoded.push_back(HermitianOperator({2}, oracles::random_density(rng, 2)));
  return discrimination_problem(oracles::random_simplex(rng, k), encoded);
}

}  // namespace

TEST_CASE("program structure carries one tied block per cut") {
  const EstimationProblem iso = isotropic_problem(2);

  HierarchyConfig level1;
  level1.level = 1;
  const ConicProgram p1 = build_global_sdp(iso, level1);
  CHECK(p1.blocks.size() == 2);  // extension + the reference-side cut
  CHECK(p1.ties.size() == 1);
  CHECK(p1.ties[0].source == 0);
  CHECK(p1.ties[0].transposed == FactorSubset{1});
  REQUIRE(p1.objective.size() == 1);
  CHECK(p1.objective[0].first == 0);
  for (const auto& cap : p1.trace_caps) {
    REQUIRE(cap.has_value());
    CHECK(*cap == 2.0);
  }

  HierarchyConfig level2;
  level2.level = 2;
  const ConicProgram p2 = build_global_sdp(iso, level2);
  CHECK(p2.blocks.size() == 3);  // + the last-copy cut
  CHECK(p2.ties.size() == 2);
  for (const TransposeTie& tie : p2.ties) CHECK(tie.source == 0);
  CHECK(p2.blocks[0].dims == std::vector<int>{2, 2, 2});
  CHECK(p2.equalities.size() > p1.equalities.size());  // invariance rows
}

TEST_CASE("uniform pure-state family level-1 values") {
  for (const auto& [d, expected] : {std::pair{2, 2.0 / 3.0}, {3, 0.5}}) {
    const BoundReport report = upper_bound(isotropic_problem(d));
    CHECK(report.solver_status == SolveStatus::optimal);
    CHECK(report.level == 1);
    CHECK(report.certified_bound == doctest::Approx(expected).epsilon(1e-6));
    CHECK(report.primal_value == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("two-state discrimination matches the closed form") {
  for (double s : {0.6, 0.9}) {
    const BoundReport report = upper_bound(two_pure_problem(s));
    CHECK(report.solver_status == SolveStatus::optimal);
    CHECK(report.certified_bound ==
          doctest::Approx(oracles::helstrom_fidelity(s)).epsilon(1e-6));
  }
}

TEST_CASE("levels are monotone on random ensembles") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 3; ++trial) {
    const EstimationProblem problem = random_qubit_discrimination(rng, 3);
    HierarchyConfig config;
    config.level = 1;
    const BoundReport first = upper_bound(problem, config);
    config.level = 2;
    const BoundReport second = upper_bound(problem, config);
    CHECK(first.certified_bound <= 1.0 + 1e-6);
    CHECK(second.certified_bound >= 0.0);
    CHECK(second.certified_bound <= first.certified_bound + 1e-6);
  }
}

TEST_CASE("solved extension is copy-permutation symmetric") {
  const EstimationProblem iso = isotropic_problem(2);
  HierarchyConfig config;
  config.level = 2;
  const ConicProgram program = build_global_sdp(iso, config);
  const Solution solution = solve(program);
  REQUIRE(solution.status == SolveStatus::optimal);

  const ComplexMatrix& omega = solution.primal_blocks[0];
  const ComplexMatrix perm = permutation_operator({1, 0, 2}, 2);
  CHECK((perm * omega * perm.adjoint() - omega).norm() <= 1e-6);

  // Tied blocks are materialized partial transposes of the extension.
  const std::vector<int> dims{2, 2, 2};
  for (const TransposeTie& tie : program.ties) {
    const ComplexMatrix expected = oracles::naive_partial_transpose(
        omega, dims, tie.transposed.indices());
    CHECK((solution.primal_blocks[tie.block] - expected).norm() < 1e-13);
  }

  // The reduction over everything but the first copy is the identity.
  const HermitianOperator ext(dims, omega);
  const HermitianOperator reduced = partial_trace(ext, FactorSubset{1, 2});
  CHECK((reduced.matrix() - ComplexMatrix::Identity(2, 2)).norm() < 1e-6);
}

TEST_CASE("explicit cuts reproduce and relax the canonical set") {
  const EstimationProblem problem = two_pure_problem(0.4);
  HierarchyConfig canonical;
  canonical.level = 2;
  const BoundReport base = upper_bound(problem, canonical);

  HierarchyConfig manual = canonical;
  manual.cuts = std::vector<FactorSubset>{FactorSubset{1}, FactorSubset{2}};
  const BoundReport same = upper_bound(problem, manual);
  CHECK(same.certified_bound ==
        doctest::Approx(base.certified_bound).epsilon(1e-6));

  // Transposing a subset or its complement gives the same tied cone.
  HierarchyConfig flipped = canonical;
  flipped.cuts = std::vector<FactorSubset>{FactorSubset{0, 2}, FactorSubset{0, 1}};
  const BoundReport comp = upper_bound(problem, flipped);
  CHECK(comp.certified_bound ==
        doctest::Approx(base.certified_bound).epsilon(1e-6));

  // Dropping cuts can only loosen the relaxation.
  HierarchyConfig loose = canonical;
  loose.cuts = std::vector<FactorSubset>{};
  const BoundReport relaxed = upper_bound(problem, loose);
  CHECK(relaxed.certified_bound >= base.certified_bound - 1e-9);
}

TEST_CASE("certified bound dominates the dual value") {
  std::mt19937_64 rng(89);
  const EstimationProblem problem = random_qubit_discrimination(rng, 2);
  const BoundReport report = upper_bound(problem);
  CHECK(report.certified_bound >= report.dual_value - 1e-15);
  CHECK(report.primal_value <= report.certified_bound + 1e-7);
  CHECK(report.iterations > 0);
  CHECK(report.wall_seconds >= 0.0);
  CHECK(report.residuals.primal_feasibility < 1e-7);
}

TEST_CASE("configuration errors") {
  const EstimationProblem iso = isotropic_problem(3);
  HierarchyConfig config;
  config.level = 0;
  CHECK_THROWS_AS(upper_bound(iso, config), ValidationError);

  config.level = 3;
  config.size_cap = 50;
  try {
    upper_bound(iso, config);
    FAIL("size cap not enforced");
  } catch (const SizeCapError& e) {
    CHECK(std::string(e.what()).find("81 exceeds cap 50") !=
          std::string::npos);
  }

  config.level = 1;
  config.size_cap = 256;
  config.cuts = std::vector<FactorSubset>{FactorSubset{5}};
  CHECK_THROWS_AS(upper_bound(iso, config), ValidationError);
}

TEST_CASE("repeated solves are bit-identical") {
  const EstimationProblem problem = two_pure_problem(0.7);
  const BoundReport a = upper_bound(problem);
  const BoundReport b = upper_bound(problem);
  CHECK(std::memcmp(&a.primal_value, &b.primal_value, sizeof(double)) == 0);
  CHECK(std::memcmp(&a.dual_value, &b.dual_value, sizeof(double)) == 0);
  CHECK(std::memcmp(&a.certified_bound, &b.certified_bound, sizeof(double)) ==
        0);
  CHECK(a.iterations == b.iterations);
}
