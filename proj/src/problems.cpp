#include "fidbound/problems.hpp"

#include <cmath>
#include <numeric>

namespace fidbound {

namespace {

constexpr double kEnsembleTol = 1e-9;

void check_state(const HermitianOperator& m, bool pure, const std::string& what) {
  if (std::abs(m.trace() - 1.0) > kEnsembleTol)
    throw ValidationError(what + " does not have unit trace");
  if (min_eigenvalue(m) < -kEnsembleTol)
    throw ValidationError(what + " is not positive semidefinite");
  if (pure) {
    const double purity = trace_product(m.matrix(), m.matrix());
    if (std::abs(purity - 1.0) > kEnsembleTol)
      throw ValidationError(what + " is not pure");
  }
}

}  // namespace

void Ensemble::validate() const {
  if (d_a < 1 || d_b < 1)
    throw ValidationError("Ensemble: dimensions must be positive");
  if (symbolic) {
    if (!items.empty())
      throw ValidationError("Ensemble: symbolic ensemble carries items");
    return;
  }
  if (items.empty()) throw ValidationError("Ensemble: no items");
  double total = 0.0;
  for (size_t i = 0; i < items.size(); ++i) {
    const std::string tag = "Ensemble item " + std::to_string(i);
    if (items[i].prob <= 0.0)
      throw ValidationError(tag + ": probability is not positive");
    total += items[i].prob;
    if (items[i].target.side() != d_b)
      throw ValidationError(tag + ": target dimension mismatch");
    if (items[i].encoded.side() != d_a)
      throw ValidationError(tag + ": encoded dimension mismatch");
    check_state(items[i].target, true, tag + ": target");
    check_state(items[i].encoded, false, tag + ": encoded state");
  }
  if (std::abs(total - 1.0) > kEnsembleTol)
    throw ValidationError("Ensemble: probabilities sum to " +
                          std::to_string(total));
}

EstimationProblem build_problem(const Ensemble& ensemble) {
  ensemble.validate();
  if (ensemble.symbolic)
    throw ValidationError("build_problem: requires a finite ensemble");
  ComplexMatrix rho =
      ComplexMatrix::Zero(ensemble.d_a * ensemble.d_b, ensemble.d_a * ensemble.d_b);
  for (const EnsembleItem& item : ensemble.items) {
    const HermitianOperator enc = item.encoded.with_dims({ensemble.d_a});
    const HermitianOperator tgt = item.target.with_dims({ensemble.d_b});
    rho += item.prob * kron(enc, tgt).matrix();
  }
  HermitianOperator joint({ensemble.d_a, ensemble.d_b}, std::move(rho));
  if (min_eigenvalue(joint) < -1e-12)
    throw SolverError("build_problem: joint operator lost positivity");
  return EstimationProblem{ensemble, std::move(joint)};
}

void Strategy::validate(int d_a, int d_b) const {
  if (outcomes.empty()) throw ValidationError("Strategy: no outcomes");
  ComplexMatrix sum = ComplexMatrix::Zero(d_a, d_a);
  for (size_t x = 0; x < outcomes.size(); ++x) {
    const std::string tag = "Strategy outcome " + std::to_string(x);
    const ComplexMatrix& m = outcomes[x].povm;
    if (m.rows() != d_a || m.cols() != d_a)
      throw ValidationError(tag + ": element dimension mismatch");
    if ((m - m.adjoint()).norm() > kEnsembleTol * std::max(1.0, m.norm()))
      throw ValidationError(tag + ": element is not Hermitian");
    if (min_eigenvalue(ComplexMatrix(0.5 * (m + m.adjoint()))) < -kEnsembleTol)
      throw ValidationError(tag + ": element is not positive semidefinite");
    if (outcomes[x].guess.side() != d_b)
      throw ValidationError(tag + ": guess dimension mismatch");
    check_state(outcomes[x].guess, true, tag + ": guess");
    sum += m;
  }
  if ((sum - ComplexMatrix::Identity(d_a, d_a)).norm() > kEnsembleTol * d_a)
    throw ValidationError("Strategy: POVM does not sum to the identity");
}

HermitianOperator strategy_operator(const Strategy& strategy, int d_a, int d_b) {
  strategy.validate(d_a, d_b);
  ComplexMatrix lam = ComplexMatrix::Zero(d_a * d_b, d_a * d_b);
  for (const Strategy::Outcome& out : strategy.outcomes) {
    const HermitianOperator m({d_a}, 0.5 * (out.povm + out.povm.adjoint()));
    lam += kron(m, out.guess.with_dims({d_b})).matrix();
  }
  HermitianOperator result({d_a, d_b}, std::move(lam));
  const HermitianOperator reduced = partial_trace(result, FactorSubset{1});
  if ((reduced.matrix() - ComplexMatrix::Identity(d_a, d_a)).norm() >
      kEnsembleTol * d_a)
    throw SolverError("strategy_operator: trace over guesses is not identity");
  return result;
}

double average_fidelity(const EstimationProblem& problem,
                        const Strategy& strategy) {
  const int d_a = problem.ensemble.d_a;
  const int d_b = problem.ensemble.d_b;
  const HermitianOperator lam = strategy_operator(strategy, d_a, d_b);
  const double via_joint = trace_product(problem.rho.matrix(), lam.matrix());

  if (!problem.ensemble.symbolic) {
    double via_items = 0.0;
    for (const EnsembleItem& item : problem.ensemble.items)
      for (const Strategy::Outcome& out : strategy.outcomes)
        via_items += item.prob *
                     trace_product(item.encoded.matrix(), out.povm) *
                     trace_product(out.guess.matrix(), item.target.matrix());
    if (std::abs(via_joint - via_items) > 1e-10)
      throw SolverError(
          "average_fidelity: joint-operator and ensemble-sum routes disagree");
  }
  if (via_joint < -1e-10 || via_joint > 1.0 + 1e-10)
    throw SolverError("average_fidelity: value outside [0, 1]");
  return via_joint;
}

HermitianOperator pure_projector(const ComplexVector& ket,
                                 std::vector<int> dims) {
  const double norm = ket.norm();
  if (std::abs(norm - 1.0) > 1e-6)
    throw ValidationError("pure_projector: ket is not normalized");
  const ComplexVector v = ket / norm;
  return HermitianOperator(std::move(dims), v * v.adjoint());
}

EstimationProblem isotropic_problem(int d) {
  if (d < 2) throw ValidationError("isotropic_problem: dimension < 2");
  Ensemble e;
  e.d_a = d;
  e.d_b = d;
  e.symbolic = true;
  ComplexMatrix rho =
      (ComplexMatrix::Identity(d * d, d * d) + flip_operator(d).matrix()) /
      (d * (d + 1.0));
  return EstimationProblem{e, HermitianOperator({d, d}, std::move(rho))};
}

HermitianOperator werner_operator(int d, double t) {
  if (d < 2) throw ValidationError("werner_operator: dimension < 2");
  if (t < -1.0 || t > 1.0)
    throw ValidationError("werner_operator: parameter outside [-1, 1]");
  ComplexMatrix m =
      ((d - t) * ComplexMatrix::Identity(d * d, d * d) +
       (d * t - 1.0) * flip_operator(d).matrix()) /
      (d * d - 1.0);
  return HermitianOperator({d, d}, std::move(m));
}

std::vector<HermitianOperator> bell_states() {
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<ComplexVector> kets(4, ComplexVector::Zero(4));
  kets[0](0) = s;
  kets[0](3) = s;
  kets[1](0) = s;
  kets[1](3) = -s;
  kets[2](1) = s;
  kets[2](2) = s;
  kets[3](1) = s;
  kets[3](2) = -s;
  std::vector<HermitianOperator> out;
  for (const ComplexVector& k : kets) out.push_back(pure_projector(k, {2, 2}));
  return out;
}

EstimationProblem discrimination_problem(
    const std::vector<double>& probs,
    const std::vector<HermitianOperator>& encoded) {
  if (probs.size() != encoded.size() || probs.empty())
    throw ValidationError("discrimination_problem: size mismatch");
  const int k = static_cast<int>(probs.size());
  Ensemble e;
  e.d_b = k;
  e.d_a = encoded.front().side();
  for (int i = 0; i < k; ++i) {
    ComplexVector label = ComplexVector::Zero(k);
    label(i) = 1.0;
    e.items.push_back({probs[i], pure_projector(label, {k}),
                       encoded[i].with_dims({e.d_a})});
  }
  return build_problem(e);
}

EstimationProblem two_pure_problem(double overlap) {
  if (overlap < 0.0 || overlap > 1.0)
    throw ValidationError("two_pure_problem: overlap outside [0, 1]");
  ComplexVector a = ComplexVector::Zero(2), b = ComplexVector::Zero(2);
  a(0) = 1.0;
  b(0) = overlap;
  b(1) = std::sqrt(1.0 - overlap * overlap);
  return discrimination_problem(
      {0.5, 0.5}, {pure_projector(a, {2}), pure_projector(b, {2})});
}

EstimationProblem copies_problem(const std::vector<HermitianOperator>& states,
                                 const std::vector<double>& probs, int copies,
                                 int size_cap) {
  if (states.size() != probs.size() || states.empty())
    throw ValidationError("copies_problem: size mismatch");
  if (copies < 1) throw ValidationError("copies_problem: copies < 1");
  const int d = states.front().side();
  double powered = 1.0;
  for (int c = 0; c < copies; ++c) powered *= d;
  if (powered > size_cap)
    throw SizeCapError("copies_problem: encoded dimension " +
                       std::to_string(static_cast<long>(powered)) +
                       " exceeds cap " + std::to_string(size_cap));
  Ensemble e;
  e.d_b = d;
  e.d_a = static_cast<int>(powered);
  for (size_t i = 0; i < states.size(); ++i) {
    const HermitianOperator& s = states[i];
    if (s.side() != d)
      throw ValidationError("copies_problem: state dimensions differ");
    HermitianOperator enc = s.with_dims({d});
    for (int c = 1; c < copies; ++c) enc = kron(enc, s.with_dims({d}));
    e.items.push_back({probs[i], s.with_dims({d}), enc.with_dims({e.d_a})});
  }
  return build_problem(e);
}

Ensemble bell_ensemble(const std::vector<double>& probs) {
  if (probs.size() != 4)
    throw ValidationError("bell_ensemble: needs exactly four probabilities");
  const std::vector<HermitianOperator> psi = bell_states();
  Ensemble e;
  e.d_a = 4;
  e.d_b = 4;
  for (int i = 0; i < 4; ++i)
    e.items.push_back({probs[i], psi[i].with_dims({4}), psi[i]});
  return e;
}

Ensemble domino_ensemble() {
  const double s = 1.0 / std::sqrt(2.0);
  auto ket3 = [](int k) {
    ComplexVector v = ComplexVector::Zero(3);
    v(k) = 1.0;
    return v;
  };
  auto super = [&](int k, int l, double sign) {
    ComplexVector v = s * (ket3(k) + sign * ket3(l));
    return v;
  };
  auto prod = [](const ComplexVector& a, const ComplexVector& b) {
    ComplexVector v(9);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) v(3 * i + j) = a(i) * b(j);
    return v;
  };

  std::vector<ComplexVector> kets;
  kets.push_back(prod(ket3(1), ket3(1)));
  kets.push_back(prod(ket3(0), super(0, 1, +1)));
  kets.push_back(prod(ket3(0), super(0, 1, -1)));
  kets.push_back(prod(ket3(2), super(1, 2, +1)));
  kets.push_back(prod(ket3(2), super(1, 2, -1)));
  kets.push_back(prod(super(1, 2, +1), ket3(0)));
  kets.push_back(prod(super(1, 2, -1), ket3(0)));
  kets.push_back(prod(super(0, 1, +1), ket3(2)));
  kets.push_back(prod(super(0, 1, -1), ket3(2)));

  Ensemble e;
  e.d_a = 9;
  e.d_b = 9;
  for (const ComplexVector& k : kets)
    e.items.push_back(
        {1.0 / 9.0, pure_projector(k, {9}), pure_projector(k, {3, 3})});
  return e;
}

}  // namespace fidbound
