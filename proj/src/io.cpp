#include "fidbound/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace fidbound {
namespace {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Writer.  nlohmann emits shortest-round-trip doubles; the document contract
// pins 17 significant digits instead, so dumping is done by hand.

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_escaped(const std::string& s, std::string& out) {
  out += '"';
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

// Arrays up to two levels deep with purely numeric leaves ([re, im] pairs and
// rows of them) stay on one line; anything larger gets a row per element.
bool inline_eligible(const Json& j, int depth = 0) {
  if (!j.is_array()) return j.is_number();
  if (depth >= 2) return false;
  for (const Json& e : j) {
    if (!inline_eligible(e, depth + 1)) return false;
  }
  return true;
}

void write_value(const Json& j, std::string& out, int depth) {
  const auto pad = [](int d) { return std::string(2 * static_cast<std::size_t>(d), ' '); };
  switch (j.type()) {
    case Json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case Json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case Json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case Json::value_t::string:
      append_escaped(j.get<std::string>(), out);
      break;
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      const bool inlined = inline_eligible(j);
      out += '[';
      bool first = true;
      for (const Json& e : j) {
        if (!first) out += ',';
        first = false;
        if (inlined) {
          if (out.back() == ',') out += ' ';
        } else {
          out += '\n' + pad(depth + 1);
        }
        write_value(e, out, depth + 1);
      }
      if (!inlined) out += '\n' + pad(depth);
      out += ']';
      break;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += '\n' + pad(depth + 1);
        append_escaped(key, out);
        out += ": ";
        write_value(value, out, depth + 1);
      }
      out += '\n' + pad(depth) + '}';
      break;
    }
    default:
      out += "null";
      break;
  }
}

std::string dump(const Json& j) {
  std::string out;
  write_value(j, out, 0);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Parsing.

[[noreturn]] void fail(const std::string& message) {
  throw ValidationError("problem document: " + message);
}

const Json& require(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(std::string("missing field \"") + key + '"');
  return *it;
}

std::string require_string(const Json& obj, const char* key) {
  const Json& v = require(obj, key);
  if (!v.is_string()) fail(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

int require_positive_int(const Json& v, const std::string& context) {
  if (!v.is_number_integer()) fail(context + " must be an integer");
  const auto n = v.get<std::int64_t>();
  if (n < 1 || n > (1 << 20)) fail(context + " is out of range");
  return static_cast<int>(n);
}

double require_number(const Json& v, const std::string& context) {
  if (!v.is_number()) fail(context + " must be a number");
  return v.get<double>();
}

Complex parse_complex(const Json& v, const std::string& context) {
  if (!v.is_array() || v.size() != 2) {
    fail(context + " must be a two-element [re, im] array");
  }
  return {require_number(v[0], context + "[0]"),
          require_number(v[1], context + "[1]")};
}

ComplexVector parse_vector(const Json& v, const std::string& context) {
  ComplexVector out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) =
        parse_complex(v[k], context + '[' + std::to_string(k) + ']');
  }
  return out;
}

ComplexMatrix parse_matrix(const Json& v, const std::string& context) {
  const auto rows = static_cast<Eigen::Index>(v.size());
  ComplexMatrix out;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = v[static_cast<std::size_t>(r)];
    const std::string row_context = context + '[' + std::to_string(r) + ']';
    if (!row.is_array()) fail(row_context + " must be an array");
    if (r == 0) out.resize(rows, static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != out.cols()) {
      fail(row_context + " has a different length than the first row");
    }
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      out(r, c) = parse_complex(row[static_cast<std::size_t>(c)],
                                row_context + '[' + std::to_string(c) + ']');
    }
  }
  return out;
}

// A state is either a ket (array of complex pairs, normalized only when
// within 1e-6 of unit norm) or a square matrix (nested rows).
HermitianOperator parse_state(const Json& v, int side, const std::string& context) {
  if (!v.is_array() || v.empty()) fail(context + " must be a non-empty array");
  if (!v[0].is_array() || v[0].empty()) {
    fail(context + " must hold complex pairs or rows of them");
  }
  const bool is_matrix = v[0][0].is_array();
  if (is_matrix) {
    ComplexMatrix m = parse_matrix(v, context);
    if (m.rows() != m.cols()) fail(context + " must be square");
    if (m.rows() != side) {
      fail(context + " has side " + std::to_string(m.rows()) + ", expected " +
           std::to_string(side));
    }
    try {
      return HermitianOperator({side}, std::move(m));
    } catch (const ValidationError& e) {
      fail(context + ": " + e.what());
    }
  }
  ComplexVector ket = parse_vector(v, context);
  if (ket.size() != side) {
    fail(context + " has length " + std::to_string(ket.size()) + ", expected " +
         std::to_string(side));
  }
  try {
    return pure_projector(ket, {side});
  } catch (const ValidationError& e) {
    fail(context + ": " + e.what());
  }
}

HermitianOperator parse_rho(const Json& v, std::vector<int> dims) {
  Eigen::Index side = 1;
  for (const int d : dims) side *= d;
  if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty() ||
      !v[0][0].is_array()) {
    fail("\"rho\" must be a matrix (nested rows of [re, im] pairs)");
  }
  ComplexMatrix m = parse_matrix(v, "\"rho\"");
  if (m.rows() != m.cols() || m.rows() != side) {
    fail("\"rho\" must be square with side " + std::to_string(side));
  }
  try {
    HermitianOperator rho(std::move(dims), std::move(m));
    if (std::abs(rho.trace() - 1.0) > 1e-9) fail("\"rho\" must have unit trace");
    if (min_eigenvalue(rho) < -1e-9) {
      fail("\"rho\" must be positive semidefinite");
    }
    return rho;
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind("problem document:", 0) == 0) throw;
    fail("\"rho\": " + what);
  }
}

// ---------------------------------------------------------------------------
// Document construction.

Json complex_to_json(const Complex z) { return Json::array({z.real(), z.imag()}); }

Json matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json problem_to_json(const ProblemDocument& doc) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = doc.name;
  j["kind"] = doc.kind;
  Json dims;
  if (doc.kind == "local") {
    dims["parties"] = doc.party_dims;
    dims["d_c"] = doc.d_b;
  } else {
    dims["d_a"] = doc.d_a;
    dims["d_b"] = doc.d_b;
  }
  j["dims"] = std::move(dims);
  if (doc.ensemble) {
    Json states = Json::array();
    for (const EnsembleItem& item : doc.ensemble->items) {
      Json s;
      s["prob"] = item.prob;
      s["target"] = matrix_to_json(item.target.matrix());
      s["encoded"] = matrix_to_json(item.encoded.matrix());
      states.push_back(std::move(s));
    }
    j["states"] = std::move(states);
  } else if (doc.rho) {
    j["rho"] = matrix_to_json(doc.rho->matrix());
  }
  return j;
}

Json bound_report_to_json(const BoundReport& report) {
  Json j;
  j["level"] = report.level;
  j["primal_value"] = report.primal_value;
  j["dual_value"] = report.dual_value;
  j["certified_bound"] = report.certified_bound;
  j["solver_status"] = to_string(report.solver_status);
  Json residuals;
  residuals["primal_feasibility"] = report.residuals.primal_feasibility;
  residuals["dual_feasibility"] = report.residuals.dual_feasibility;
  residuals["duality_gap"] = report.residuals.duality_gap;
  j["residuals"] = std::move(residuals);
  j["iterations"] = report.iterations;
  j["wall_seconds"] = report.wall_seconds;
  return j;
}

Ensemble symbolic_ensemble(int d_a, int d_b) {
  Ensemble e;
  e.d_a = d_a;
  e.d_b = d_b;
  e.symbolic = true;
  return e;
}

}  // namespace

ProblemDocument parse_problem(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");
  const Json& version = require(j, "schema_version");
  if (!version.is_number_integer() || version.get<std::int64_t>() != kSchemaVersion) {
    fail("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ')');
  }

  ProblemDocument doc;
  doc.name = require_string(j, "name");
  doc.kind = require_string(j, "kind");
  if (doc.kind != "global" && doc.kind != "local") {
    fail("field \"kind\" must be \"global\" or \"local\"");
  }

  const Json& dims = require(j, "dims");
  if (!dims.is_object()) fail("field \"dims\" must be an object");
  if (doc.kind == "local") {
    const Json& parties = require(dims, "parties");
    if (!parties.is_array() || parties.size() < 2) {
      fail("dims.parties must list at least two party dimensions");
    }
    std::int64_t product = 1;
    for (std::size_t p = 0; p < parties.size(); ++p) {
      const int d = require_positive_int(
          parties[p], "dims.parties[" + std::to_string(p) + ']');
      doc.party_dims.push_back(d);
      product *= d;
      if (product > (1 << 20)) fail("dims.parties product is out of range");
    }
    doc.d_a = static_cast<int>(product);
    doc.d_b = require_positive_int(require(dims, "d_c"), "dims.d_c");
  } else {
    doc.d_a = require_positive_int(require(dims, "d_a"), "dims.d_a");
    doc.d_b = require_positive_int(require(dims, "d_b"), "dims.d_b");
  }

  const bool has_states = j.contains("states");
  const bool has_rho = j.contains("rho");
  if (has_states == has_rho) {
    fail("exactly one of \"states\" and \"rho\" is required");
  }

  if (has_states) {
    const Json& states = j["states"];
    if (!states.is_array() || states.empty()) {
      fail("field \"states\" must be a non-empty array");
    }
    Ensemble ensemble;
    ensemble.d_a = doc.d_a;
    ensemble.d_b = doc.d_b;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const Json& s = states[i];
      const std::string context = "states[" + std::to_string(i) + ']';
      if (!s.is_object()) fail(context + " must be an object");
      const double prob = require_number(require(s, "prob"), context + ".prob");
      HermitianOperator target =
          parse_state(require(s, "target"), doc.d_b, context + ".target");
      HermitianOperator encoded =
          parse_state(require(s, "encoded"), doc.d_a, context + ".encoded");
      ensemble.items.push_back({prob, std::move(target), std::move(encoded)});
    }
    try {
      ensemble.validate();
    } catch (const ValidationError& e) {
      fail(e.what());
    }
    doc.ensemble = std::move(ensemble);
  } else {
    std::vector<int> rho_dims;
    if (doc.kind == "local") {
      rho_dims = doc.party_dims;
      rho_dims.push_back(doc.d_b);
    } else {
      rho_dims = {doc.d_a, doc.d_b};
    }
    doc.rho = parse_rho(j["rho"], std::move(rho_dims));
  }
  return doc;
}

std::string serialize_problem(const ProblemDocument& doc) {
  return dump(problem_to_json(doc));
}

EstimationProblem ProblemDocument::to_problem() const {
  if (kind != "global") {
    throw ValidationError("problem document: kind \"" + kind +
                          "\" where \"global\" is required");
  }
  if (ensemble) return build_problem(*ensemble);
  return EstimationProblem{symbolic_ensemble(d_a, d_b), rho->with_dims({d_a, d_b})};
}

LocalEstimationProblem ProblemDocument::to_local_problem() const {
  if (kind != "local") {
    throw ValidationError("problem document: kind \"" + kind +
                          "\" where \"local\" is required");
  }
  if (ensemble) return build_local_problem(*ensemble, party_dims);
  std::vector<int> dims = party_dims;
  dims.push_back(d_b);
  return LocalEstimationProblem{symbolic_ensemble(d_a, d_b), party_dims, d_b,
                                rho->with_dims(std::move(dims))};
}

ProblemDocument document_from_problem(std::string name,
                                      const EstimationProblem& problem) {
  ProblemDocument doc;
  doc.name = std::move(name);
  doc.kind = "global";
  doc.d_a = problem.ensemble.d_a;
  doc.d_b = problem.ensemble.d_b;
  if (problem.ensemble.symbolic) {
    doc.rho = problem.rho;
  } else {
    doc.ensemble = problem.ensemble;
  }
  return doc;
}

ProblemDocument document_from_local_problem(std::string name,
                                            const LocalEstimationProblem& problem) {
  ProblemDocument doc;
  doc.name = std::move(name);
  doc.kind = "local";
  doc.party_dims = problem.party_dims;
  doc.d_a = problem.ensemble.d_a;
  doc.d_b = problem.d_c;
  if (problem.ensemble.symbolic) {
    doc.rho = problem.rho_abc;
  } else {
    doc.ensemble = problem.ensemble;
  }
  return doc;
}

std::string serialize_report(const ReportDocument& doc) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = doc.tool_version;
  j["seed"] = doc.seed;
  if (doc.problem) j["problem"] = problem_to_json(*doc.problem);
  Json levels = Json::array();
  for (const BoundReport& report : doc.levels) {
    levels.push_back(bound_report_to_json(report));
  }
  j["levels"] = std::move(levels);
  if (doc.seesaw) {
    Json s;
    s["fidelity"] = doc.seesaw->fidelity;
    s["outcomes"] = doc.seesaw->outcomes;
    s["restarts"] = doc.seesaw->restarts;
    s["best_restart"] = doc.seesaw->best_restart;
    s["sweeps"] = doc.seesaw->sweeps;
    s["converged"] = doc.seesaw->converged;
    j["seesaw"] = std::move(s);
  }
  if (doc.certificate) {
    Json c;
    c["probs"] = doc.certificate->probs;
    c["lambda"] = doc.certificate->lambda;
    c["mu"] = doc.certificate->mu;
    c["bound"] = doc.certificate->bound;
    c["feasibility_slack"] = doc.certificate->feasibility_slack;
    j["certificate"] = std::move(c);
  }
  return dump(j);
}

}  // namespace fidbound
