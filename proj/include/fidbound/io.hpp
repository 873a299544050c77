#pragma once

#include "fidbound/dps_global.hpp"
#include "fidbound/dps_local.hpp"
#include "fidbound/problems.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fidbound {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Parsed problem file (schema in docs/schema.md).  Exactly one of `ensemble`
// (the "states" field) and `rho` is populated.
struct ProblemDocument {
  std::string name;
  std::string kind;             // "global" or "local"
  std::vector<int> party_dims;  // local kind only; product equals d_a
  int d_a = 0;
  int d_b = 0;  // reference dimension; holds d_c for the local kind
  std::optional<Ensemble> ensemble;
  std::optional<HermitianOperator> rho;

  // kind == "global".  Rebuilds the joint operator from the states when an
  // ensemble is present, otherwise wraps the explicit rho symbolically.
  EstimationProblem to_problem() const;
  // kind == "local".
  LocalEstimationProblem to_local_problem() const;
};

// Throws ValidationError on any malformed input, including JSON syntax
// errors; the message names the offending field.
ProblemDocument parse_problem(const std::string& json_text);
std::string serialize_problem(const ProblemDocument& doc);

// Wraps a built problem so generator shortcuts can echo their input and the
// serialize/parse round trip stays testable against the original operator.
ProblemDocument document_from_problem(std::string name,
                                      const EstimationProblem& problem);
ProblemDocument document_from_local_problem(std::string name,
                                            const LocalEstimationProblem& problem);

struct SeesawRecord {
  double fidelity = 0.0;
  int outcomes = 0;
  int restarts = 0;
  int best_restart = 0;
  int sweeps = 0;
  bool converged = false;
};

struct CertificateRecord {
  std::vector<double> probs;
  std::vector<double> lambda;
  std::vector<double> mu;
  double bound = 0.0;
  double feasibility_slack = 0.0;
};

struct ReportDocument {
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  std::optional<ProblemDocument> problem;  // echo of the input
  std::vector<BoundReport> levels;         // ascending level order
  std::optional<SeesawRecord> seesaw;
  std::optional<CertificateRecord> certificate;
};

// Every number is written with 17 significant digits, so re-parsing
// reproduces each double bit for bit.
std::string serialize_report(const ReportDocument& doc);

}  // namespace fidbound
