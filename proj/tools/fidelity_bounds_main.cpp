// fidelity-bounds: certified upper bounds, separable bounds, seesaw lower
// bounds, and Bell dual certificates for pure-state estimation problems.
//
// Exit codes: 0 solved to tolerance, 1 input error (no report), 2 solver
// finished without reaching optimality (report still written; certified
// bounds remain valid).

#include "fidbound/dps_global.hpp"
#include "fidbound/dps_local.hpp"
#include "fidbound/io.hpp"
#include "fidbound/problems.hpp"
#include "fidbound/seesaw.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace fidbound;

struct Options {
  std::string problem_path;
  std::string generate;
  int dim = 2;
  std::vector<double> probs;
  double overlap = -1.0;
  int copies = 2;
  int level = 1;
  std::string levels_range;
  int max_size = 256;
  double tolerance = 1e-8;
  int max_iterations = 200;
  bool parallel = false;
  int verbosity = 0;
  std::optional<std::uint64_t> seed;
  int restarts = 10;
  int max_sweeps = 200;
  int outcomes = -1;
  std::string output_path;
};

std::uint64_t resolve_seed(const Options& opt) {
  if (opt.seed) return *opt.seed;
  if (const char* env = std::getenv("FIDELITY_BOUNDS_SEED")) {
    const std::string text(env);
    std::size_t used = 0;
    std::uint64_t value = 0;
    try {
      value = std::stoull(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.empty()) {
      throw ValidationError("FIDELITY_BOUNDS_SEED is not an unsigned integer: " + text);
    }
    return value;
  }
  return 0;
}

std::string read_problem_text(const std::string& path) {
  if (path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open problem file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string join_probs(const std::vector<double>& probs) {
  std::ostringstream name;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i) name << ',';
    name << probs[i];
  }
  return name.str();
}

// Generator shortcuts; `local` selects the document kind where a family
// supports both readings (bell, domino).
ProblemDocument generate_document(const Options& opt, bool local) {
  const std::string& family = opt.generate;
  if (family == "isotropic") {
    if (local) throw ValidationError("--generate isotropic has no local form");
    return document_from_problem("isotropic-d" + std::to_string(opt.dim),
                                 isotropic_problem(opt.dim));
  }
  if (family == "two-pure" || family == "copies") {
    if (local) throw ValidationError("--generate " + family + " has no local form");
    if (opt.overlap < 0.0 || opt.overlap > 1.0) {
      throw ValidationError("--generate " + family + " requires --overlap in [0, 1]");
    }
    EstimationProblem base = two_pure_problem(opt.overlap);
    std::ostringstream name;
    name << "two-pure-" << opt.overlap;
    if (family == "two-pure") return document_from_problem(name.str(), base);
    std::vector<HermitianOperator> states;
    std::vector<double> probs;
    for (const EnsembleItem& item : base.ensemble.items) {
      states.push_back(item.encoded);
      probs.push_back(item.prob);
    }
    name << "-x" << opt.copies;
    return document_from_problem(
        name.str(), copies_problem(states, probs, opt.copies, opt.max_size));
  }
  if (family == "bell") {
    if (opt.probs.empty()) throw ValidationError("--generate bell requires --probs");
    const std::string name = "bell-" + join_probs(opt.probs);
    const Ensemble ensemble = bell_ensemble(opt.probs);
    if (local) {
      return document_from_local_problem(name, build_local_problem(ensemble, {2, 2}));
    }
    return document_from_problem(name, build_problem(ensemble));
  }
  if (family == "domino") {
    const Ensemble ensemble = domino_ensemble();
    if (local) {
      return document_from_local_problem("domino", build_local_problem(ensemble, {3, 3}));
    }
    return document_from_problem("domino", build_problem(ensemble));
  }
  throw ValidationError("unknown generator \"" + family + '"');
}

ProblemDocument load_document(const Options& opt, bool local) {
  const bool has_file = !opt.problem_path.empty();
  const bool has_generator = !opt.generate.empty();
  if (has_file == has_generator) {
    throw ValidationError("exactly one of --problem and --generate is required");
  }
  if (has_file) return parse_problem(read_problem_text(opt.problem_path));
  return generate_document(opt, local);
}

std::vector<int> resolve_levels(const Options& opt) {
  if (opt.levels_range.empty()) {
    if (opt.level < 1) throw ValidationError("--level must be at least 1");
    return {opt.level};
  }
  const auto sep = opt.levels_range.find("..");
  int lo = 0;
  int hi = 0;
  try {
    if (sep == std::string::npos) throw std::invalid_argument("no ..");
    std::size_t used_lo = 0;
    std::size_t used_hi = 0;
    lo = std::stoi(opt.levels_range.substr(0, sep), &used_lo);
    const std::string tail = opt.levels_range.substr(sep + 2);
    hi = std::stoi(tail, &used_hi);
    if (used_lo != sep || used_hi != tail.size()) throw std::invalid_argument("junk");
  } catch (const std::exception&) {
    throw ValidationError("--levels expects a range like 1..3");
  }
  if (lo < 1 || hi < lo) throw ValidationError("--levels range must satisfy 1 <= a <= b");
  std::vector<int> levels;
  for (int n = lo; n <= hi; ++n) levels.push_back(n);
  return levels;
}

SolverSettings solver_settings(const Options& opt) {
  SolverSettings settings;
  settings.feasibility_tolerance = opt.tolerance;
  settings.gap_tolerance = opt.tolerance;
  settings.max_iterations = opt.max_iterations;
  settings.verbosity = opt.verbosity;
  return settings;
}

void emit_report(const ReportDocument& report, const Options& opt) {
  const std::string text = serialize_report(report);
  if (!opt.output_path.empty()) {
    std::ofstream out(opt.output_path, std::ios::binary);
    if (!out) throw ValidationError("cannot open output file: " + opt.output_path);
    out << text;
  }
  std::cout << text;
}

int finish_bound_run(ReportDocument report, const Options& opt) {
  bool all_optimal = true;
  for (const BoundReport& level : report.levels) {
    if (level.solver_status != SolveStatus::optimal) all_optimal = false;
  }
  emit_report(report, opt);
  return all_optimal ? 0 : 2;
}

// `solve_level` maps a level to its BoundReport; shared by the global and
// local subcommands so the --levels fan-out behaves identically.
template <typename SolveLevel>
std::vector<BoundReport> run_levels(const std::vector<int>& levels,
                                    const SolveLevel& solve_level, bool parallel) {
  std::vector<BoundReport> reports;
  reports.reserve(levels.size());
  if (parallel && levels.size() > 1) {
    std::vector<std::future<BoundReport>> futures;
    futures.reserve(levels.size());
    for (const int n : levels) {
      futures.push_back(std::async(std::launch::async, solve_level, n));
    }
    for (auto& f : futures) reports.push_back(f.get());
  } else {
    for (const int n : levels) reports.push_back(solve_level(n));
  }
  return reports;
}

int run_bound(const Options& opt) {
  ProblemDocument doc = load_document(opt, /*local=*/false);
  const EstimationProblem problem = doc.to_problem();
  HierarchyConfig config;
  config.settings = solver_settings(opt);
  config.size_cap = opt.max_size;
  const auto solve_level = [&problem, config](int n) {
    HierarchyConfig level_config = config;
    level_config.level = n;
    return upper_bound(problem, level_config);
  };
  ReportDocument report;
  report.seed = resolve_seed(opt);
  report.levels = run_levels(resolve_levels(opt), solve_level, opt.parallel);
  report.problem = std::move(doc);
  return finish_bound_run(std::move(report), opt);
}

int run_local_bound(const Options& opt) {
  ProblemDocument doc = load_document(opt, /*local=*/true);
  const LocalEstimationProblem problem = doc.to_local_problem();
  HierarchyConfig config;
  config.settings = solver_settings(opt);
  config.size_cap = opt.max_size;
  const auto solve_level = [&problem, config](int n) {
    HierarchyConfig level_config = config;
    level_config.level = n;
    return separable_upper_bound(problem, level_config);
  };
  ReportDocument report;
  report.seed = resolve_seed(opt);
  report.levels = run_levels(resolve_levels(opt), solve_level, opt.parallel);
  report.problem = std::move(doc);
  return finish_bound_run(std::move(report), opt);
}

int run_seesaw(const Options& opt) {
  ProblemDocument doc = load_document(opt, /*local=*/false);
  const EstimationProblem problem = doc.to_problem();
  SeesawConfig config;
  if (opt.outcomes >= 0) config.outcomes = opt.outcomes;
  config.restarts = opt.restarts;
  config.max_sweeps = opt.max_sweeps;
  config.seed = resolve_seed(opt);
  config.settings = solver_settings(opt);
  const SeesawResult result = seesaw_lower_bound(problem, config);
  ReportDocument report;
  report.seed = config.seed;
  report.problem = std::move(doc);
  report.seesaw = SeesawRecord{result.fidelity, result.outcomes, config.restarts,
                               result.best_restart, result.sweeps, result.converged};
  emit_report(report, opt);
  return 0;
}

int run_certify_bell(const Options& opt) {
  const BellCertificate cert = bell_dual_certificate(opt.probs);
  ReportDocument report;
  report.seed = resolve_seed(opt);
  report.certificate = CertificateRecord{opt.probs, cert.lambda, cert.mu,
                                         cert.bound, cert.feasibility_slack};
  emit_report(report, opt);
  return 0;
}

void add_problem_options(CLI::App* cmd, Options& opt, bool with_generators) {
  cmd->add_option("--problem", opt.problem_path,
                  "Problem document path, or - for stdin");
  if (!with_generators) return;
  cmd->add_option("--generate", opt.generate,
                  "Built-in family: isotropic, bell, domino, two-pure, copies")
      ->excludes("--problem");
  cmd->add_option("--dim", opt.dim, "Dimension for --generate isotropic");
  cmd->add_option("--probs", opt.probs,
                  "Comma-separated probabilities for --generate bell")
      ->delimiter(',');
  cmd->add_option("--overlap", opt.overlap,
                  "Inner product for --generate two-pure/copies");
  cmd->add_option("--copies", opt.copies, "Copy count for --generate copies");
}

void add_solver_options(CLI::App* cmd, Options& opt) {
  cmd->add_option("--tol", opt.tolerance, "Solver feasibility/gap tolerance");
  cmd->add_option("--max-iterations", opt.max_iterations, "Interior-point iteration cap");
  cmd->add_flag("-v,--verbose", opt.verbosity, "Solver trace on stderr (repeat for more)");
}

void add_level_options(CLI::App* cmd, Options& opt) {
  cmd->add_option("--level", opt.level, "Hierarchy level n (default 1)");
  cmd->add_option("--levels", opt.levels_range, "Inclusive level range, e.g. 1..3")
      ->excludes("--level");
  cmd->add_option("--max-size", opt.max_size,
                  "Largest extension side the builder may create");
  cmd->add_flag("--parallel", opt.parallel, "Solve the --levels range concurrently");
}

void add_output_options(CLI::App* cmd, Options& opt) {
  cmd->add_option("--output", opt.output_path, "Also write the report to this file");
  cmd->add_option("--seed", opt.seed,
                  "Seed echoed in reports and used by seesaw "
                  "(default: FIDELITY_BOUNDS_SEED or 0)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified fidelity bounds for pure-state estimation"};
  app.require_subcommand(1);
  Options opt;

  CLI::App* bound = app.add_subcommand(
      "bound", "Upper bound from the global extension hierarchy");
  add_problem_options(bound, opt, true);
  add_level_options(bound, opt);
  add_solver_options(bound, opt);
  add_output_options(bound, opt);

  CLI::App* local_bound = app.add_subcommand(
      "local-bound", "Separable (local strategy) upper bound");
  add_problem_options(local_bound, opt, true);
  add_level_options(local_bound, opt);
  add_solver_options(local_bound, opt);
  add_output_options(local_bound, opt);

  CLI::App* seesaw = app.add_subcommand(
      "seesaw", "Attainable lower bound by alternating optimization");
  add_problem_options(seesaw, opt, true);
  seesaw->add_option("--outcomes", opt.outcomes, "POVM outcome count");
  seesaw->add_option("--restarts", opt.restarts, "Independent seeded restarts");
  seesaw->add_option("--max-sweeps", opt.max_sweeps, "Sweep cap per restart");
  add_solver_options(seesaw, opt);
  add_output_options(seesaw, opt);

  CLI::App* certify = app.add_subcommand(
      "certify-bell", "Closed-form dual certificate for a Bell-basis ensemble");
  certify->add_option("--probs", opt.probs, "Comma-separated Bell probabilities")
      ->delimiter(',')
      ->required();
  add_output_options(certify, opt);

  try {
    app.parse(argc, argv);
    if (bound->parsed()) return run_bound(opt);
    if (local_bound->parsed()) return run_local_bound(opt);
    if (seesaw->parsed()) return run_seesaw(opt);
    if (certify->parsed()) return run_certify_bell(opt);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const SizeCapError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
