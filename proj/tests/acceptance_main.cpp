// End-to-end acceptance gate.  Each criterion prints exactly one PASS/FAIL
// line; the process exits nonzero if any criterion fails.  Tolerances and
// runtime budgets are pinned here on purpose — loosening them is a contract
// change, not a tuning knob.

#include "fidbound/dps_global.hpp"
#include "fidbound/dps_local.hpp"
#include "fidbound/seesaw.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

using namespace fidbound;

namespace {

constexpr double kValueTol = 1e-6;    // solver-facing value agreement
constexpr double kFormulaTol = 1e-12; // closed forms evaluated directly
constexpr double kWeakDualityTol = 1e-7;
constexpr double kCertifiedSlack = 1e-15;  // certified bound vs dual value

// Every bound computed anywhere in this binary lands here; the property
// criterion re-checks weak duality and certificate consistency on all of
// them.
std::vector<BoundReport> g_reports;

BoundReport record(BoundReport report) {
  g_reports.push_back(report);
  return report;
}

double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

bool check(bool ok, const char* what, std::string& detail) {
  if (!ok && detail.empty()) detail = what;
  return ok;
}

// 1. Level-1 value of the uniform pure-state family: 2/(d+1).
bool isotropic_exactness(std::string& detail) {
  bool ok = true;
  for (const auto& [d, expected] : {std::pair{2, 2.0 / 3.0}, {3, 0.5}}) {
    const auto start = std::chrono::steady_clock::now();
    const BoundReport report = record(upper_bound(isotropic_problem(d)));
    const double elapsed = seconds_since(start);
    ok &= check(std::abs(report.certified_bound - expected) <= kValueTol,
                "bound off the closed form", detail);
    ok &= check(report.solver_status == SolveStatus::optimal,
                "solver not optimal", detail);
    ok &= check(elapsed < 10.0, "single solve exceeded 10 s", detail);
  }
  return ok;
}

// 2. tr(rho_iso W(t)) = (1+t)/(d+1), evaluated directly.
bool werner_formula(std::string& detail) {
  bool ok = true;
  for (int d : {2, 3, 4}) {
    const EstimationProblem iso = isotropic_problem(d);
    for (double t : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      const double value =
          trace_product(iso.rho.matrix(), werner_operator(d, t).matrix());
      ok &= check(std::abs(value - (1.0 + t) / (d + 1.0)) <= kFormulaTol,
                  "formula violated beyond 1e-12", detail);
    }
  }
  return ok;
}

// 3. Separable level-1 bound for the Bell-basis ensemble: p_a + p_b.
bool bell_separable_bound(std::string& detail) {
  bool ok = true;
  const std::vector<std::vector<double>> cases{{0.4, 0.3, 0.2, 0.1},
                                               {0.25, 0.25, 0.25, 0.25}};
  for (const std::vector<double>& probs : cases) {
    const LocalEstimationProblem problem =
        build_local_problem(bell_ensemble(probs), {2, 2});
    const BoundReport report = record(separable_upper_bound(problem));
    const double expected = oracles::sum_of_two_largest(probs);
    ok &= check(std::abs(report.certified_bound - expected) <= kValueTol,
                "separable bound off p_a + p_b", detail);
  }
  return ok;
}

// 4. Strategy value, solver bound, and dual certificate close on random
//    distributions.
bool bell_sandwich(std::string& detail) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uniform(1e-12, 1.0);
  bool ok = true;
  for (int trial = 0; trial < 25 && ok; ++trial) {
    std::vector<double> probs(4);
    double total = 0.0;
    for (double& p : probs) total += (p = -std::log(uniform(rng)));
    for (double& p : probs) p /= total;
    probs[3] += 1.0 - (probs[0] + probs[1] + probs[2] + probs[3]);

    const Ensemble ensemble = bell_ensemble(probs);
    const double attained = average_fidelity(build_problem(ensemble),
                                             bell_optimal_strategy(probs));
    const BoundReport solver =
        record(separable_upper_bound(build_local_problem(ensemble, {2, 2})));
    const BellCertificate certificate = bell_dual_certificate(probs);

    ok &= check(std::abs(attained - solver.certified_bound) <= kValueTol,
                "strategy vs solver", detail);
    ok &= check(std::abs(solver.certified_bound - certificate.bound) <=
                    kValueTol,
                "solver vs certificate", detail);
    ok &= check(std::abs(attained - certificate.bound) <= kValueTol,
                "strategy vs certificate", detail);
    ok &= check(certificate.feasibility_slack >= -1e-10,
                "certificate infeasible", detail);
  }
  return ok;
}

// 5. Two-state discrimination with equal priors: 0.5 (1 + sqrt(1 - s^2)).
bool helstrom_oracle(std::string& detail) {
  bool ok = true;
  for (double s : {0.0, 0.3, 0.6, 0.9}) {
    const BoundReport report = record(upper_bound(two_pure_problem(s)));
    ok &= check(std::abs(report.certified_bound -
                         oracles::helstrom_fidelity(s)) <= kValueTol,
                "bound off the closed form", detail);
  }
  return ok;
}

// 6. The nine-state product ensemble is separably perfectly identifiable.
bool domino_value(std::string& detail) {
  const LocalEstimationProblem problem =
      build_local_problem(domino_ensemble(), {3, 3});
  const BoundReport report = record(separable_upper_bound(problem));
  return check(std::abs(report.certified_bound - 1.0) <= kValueTol,
               "separable bound off 1", detail);
}

// 7. Levels shrink and the seesaw stays below them.
bool hierarchy_monotonicity(std::string& detail) {
  std::mt19937_64 rng(4096);
  bool ok = true;
  for (int trial = 0; trial < 10 && ok; ++trial) {
    std::vector<HermitianOperator> encoded;
    for (int i = 0; i < 3; ++i)
      encoded.push_back(
          HermitianOperator({2}, oracles::random_density(rng, 2)));
    const EstimationProblem problem =
        discrimination_problem(oracles::random_simplex(rng, 3), encoded);

    HierarchyConfig config;
    config.level = 1;
    const BoundReport first = record(upper_bound(problem, config));
    config.level = 2;
    const BoundReport second = record(upper_bound(problem, config));
    SeesawConfig seesaw;
    seesaw.seed = 1000 + trial;
    const SeesawResult lower = seesaw_lower_bound(problem, seesaw);

    ok &= check(second.certified_bound <= first.certified_bound + kValueTol,
                "level 2 above level 1", detail);
    ok &= check(lower.fidelity <= second.certified_bound + kValueTol,
                "seesaw above level 2", detail);
  }
  return ok;
}

// 8. Orthogonal Bell states: globally perfectly identifiable, separably
//    capped at p_a + p_b.
bool global_local_contrast(std::string& detail) {
  const std::vector<double> probs{0.4, 0.3, 0.2, 0.1};
  const Ensemble ensemble = bell_ensemble(probs);
  const BoundReport global = record(upper_bound(build_problem(ensemble)));
  const BoundReport separable =
      record(separable_upper_bound(build_local_problem(ensemble, {2, 2})));
  bool ok = check(std::abs(global.certified_bound - 1.0) <= kValueTol,
                  "global bound off 1", detail);
  ok &= check(std::abs(separable.certified_bound -
                       oracles::sum_of_two_largest(probs)) <= kValueTol,
              "separable bound off p_a + p_b", detail);
  return ok;
}

// 9. Cross-cutting properties: linear-algebra identities, weak duality and
//    certificate dominance on every bound this binary produced, certified
//    bounds above attainable strategies, and bit-identical seeded reruns.
bool property_suite(std::string& detail) {
  bool ok = true;
  std::mt19937_64 rng(77);

  for (int round = 0; round < 4; ++round) {
    const std::vector<int> dims{2, 3};
    const ComplexMatrix h = oracles::random_hermitian(rng, 6);
    const HermitianOperator op(dims, h);
    ok &= check((partial_trace(op, FactorSubset{0}).matrix() -
                 oracles::naive_partial_trace(h, dims, {0}))
                        .norm() < 1e-12,
                "partial trace identity", detail);
    const HermitianOperator twice = partial_transpose(
        partial_transpose(op, FactorSubset{1}), FactorSubset{1});
    ok &= check((twice.matrix() - h).norm() == 0.0,
                "partial transpose involution", detail);
    const EigResult eig = hermitian_eig(op);
    const ComplexMatrix residual =
        h * eig.eigenvectors -
        eig.eigenvectors * eig.eigenvalues.asDiagonal().toDenseMatrix().cast<Complex>();
    ok &= check(residual.norm() <=
                    1e-10 * std::max(1.0, h.norm()),
                "eigendecomposition residual", detail);
  }

  std::vector<HermitianOperator> encoded;
  for (int i = 0; i < 3; ++i)
    encoded.push_back(HermitianOperator({2}, oracles::random_density(rng, 2)));
  const EstimationProblem problem =
      discrimination_problem(oracles::random_simplex(rng, 3), encoded);

  SeesawConfig seesaw;
  seesaw.seed = 9;
  const SeesawResult feasible = seesaw_lower_bound(problem, seesaw);
  const BoundReport bound = record(upper_bound(problem));
  ok &= check(feasible.fidelity <= bound.certified_bound + kValueTol,
              "certified bound below a feasible strategy", detail);

  const SeesawResult again = seesaw_lower_bound(problem, seesaw);
  ok &= check(std::memcmp(&feasible.fidelity, &again.fidelity,
                          sizeof(double)) == 0,
              "seesaw rerun not bit-identical", detail);
  const BoundReport rerun = upper_bound(problem);
  ok &= check(std::memcmp(&bound.certified_bound, &rerun.certified_bound,
                          sizeof(double)) == 0,
              "solver rerun not bit-identical", detail);

  for (const BoundReport& report : g_reports) {
    ok &= check(report.primal_value <=
                    report.certified_bound + kWeakDualityTol,
                "primal above the certified bound", detail);
    ok &= check(report.certified_bound >=
                    report.dual_value - kCertifiedSlack,
                "certified bound below the dual value", detail);
    if (report.solver_status == SolveStatus::optimal) {
      ok &= check(report.residuals.primal_feasibility <= 1e-6,
                  "optimal status with loose primal residual", detail);
      ok &= check(report.residuals.duality_gap <= 1e-6,
                  "optimal status with loose gap", detail);
    }
  }
  return ok;
}

struct Criterion {
  const char* label;
  bool (*run)(std::string&);
  double budget_seconds;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"isotropic level-1 exactness", isotropic_exactness, 30.0},
      {"flip-symmetric value formula", werner_formula, 10.0},
      {"Bell separable bound", bell_separable_bound, 60.0},
      {"Bell sandwich closure", bell_sandwich, 900.0},
      {"two-state discrimination oracle", helstrom_oracle, 30.0},
      {"domino separable value", domino_value, 900.0},
      {"hierarchy monotonicity and seesaw floor", hierarchy_monotonicity,
       600.0},
      {"global-local contrast", global_local_contrast, 120.0},
      {"property suite", property_suite, 600.0},
  };

  int failures = 0;
  int index = 0;
  for (const Criterion& criterion : criteria) {
    ++index;
    std::string detail;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= criterion.budget_seconds) {
      ok = false;
      if (detail.empty()) detail = "runtime budget exceeded";
    }
    if (ok) {
      std::printf("PASS  %d/9  %s (%.1f s)\n", index, criterion.label,
                  elapsed);
    } else {
      std::printf("FAIL  %d/9  %s (%.1f s)%s%s\n", index, criterion.label,
                  elapsed, detail.empty() ? "" : " — ", detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
