#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fidbound/problems.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace fidbound;

namespace {

template <typename E, typename F>
std::string thrown_message(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return {};
}

bool mentions(const std::string& message, const std::string& needle) {
  return message.find(needle) != std::string::npos;
}

// Random K-outcome POVM on C^d: normalize random PSD pieces by the inverse
// square root of their sum.
Strategy random_strategy(std::mt19937_64& rng, int d_a, int d_b, int k) {
  std::vector<ComplexMatrix> pieces;
  ComplexMatrix sum = ComplexMatrix::Zero(d_a, d_a);
  for (int x = 0; x < k; ++x) {
    const ComplexMatrix g = oracles::random_hermitian(rng, d_a);
    pieces.push_back(ComplexMatrix(g * g));
    sum += pieces.back();
  }
  const EigResult eig = hermitian_eig(HermitianOperator({d_a}, sum));
  ComplexMatrix root_inv = ComplexMatrix::Zero(d_a, d_a);
  for (int i = 0; i < d_a; ++i)
    root_inv += eig.eigenvectors.col(i) * eig.eigenvectors.col(i).adjoint() /
                std::sqrt(eig.eigenvalues(i));
  Strategy s;
  for (int x = 0; x < k; ++x)
    s.outcomes.push_back(
        {ComplexMatrix(root_inv * pieces[x] * root_inv),
         pure_projector(oracles::random_ket(rng, d_b), {d_b})});
  return s;
}

Ensemble mixed_qutrit_ensemble(std::mt19937_64& rng) {
  Ensemble e;
  e.d_a = 3;
  e.d_b = 2;
  const std::vector<double> p = oracles::random_simplex(rng, 3);
  for (int i = 0; i < 3; ++i)
    e.items.push_back({p[i], pure_projector(oracles::random_ket(rng, 2), {2}),
                       HermitianOperator({3}, oracles::random_density(rng, 3))});
  return e;
}

}  // namespace

TEST_CASE("ensemble validation names the offending item") {
  std::mt19937_64 rng(11);
  Ensemble good = mixed_qutrit_ensemble(rng);
  CHECK_NOTHROW(good.validate());

  Ensemble bad = good;
  bad.items[1].prob = 0.0;
  CHECK(mentions(thrown_message<ValidationError>([&] { bad.validate(); }),
                 "Ensemble item 1"));

  bad = good;
  bad.items[2].target = pure_projector(oracles::random_ket(rng, 3), {3});
  CHECK(mentions(thrown_message<ValidationError>([&] { bad.validate(); }),
                 "item 2: target dimension mismatch"));

  bad = good;
  bad.items[0].encoded =
      HermitianOperator({3}, 1.5 * bad.items[0].encoded.matrix());
  CHECK(mentions(thrown_message<ValidationError>([&] { bad.validate(); }),
                 "unit trace"));

  bad = good;
  bad.items[1].target =
      HermitianOperator({2}, 0.5 * ComplexMatrix::Identity(2, 2));
  CHECK(mentions(thrown_message<ValidationError>([&] { bad.validate(); }),
                 "item 1: target is not pure"));

  bad = good;
  bad.items[0].prob += 0.25;
  CHECK(mentions(thrown_message<ValidationError>([&] { bad.validate(); }),
                 "probabilities sum"));

  Ensemble empty;
  empty.d_a = empty.d_b = 2;
  CHECK_THROWS_AS(empty.validate(), ValidationError);

  Ensemble symbolic = good;
  symbolic.symbolic = true;
  CHECK_THROWS_AS(symbolic.validate(), ValidationError);
  CHECK_THROWS_AS(build_problem(symbolic), ValidationError);
}

TEST_CASE("joint operator is the probability-weighted tensor sum") {
  std::mt19937_64 rng(23);
  const Ensemble e = mixed_qutrit_ensemble(rng);
  const EstimationProblem problem = build_problem(e);

  ComplexMatrix expected = ComplexMatrix::Zero(6, 6);
  for (const EnsembleItem& item : e.items)
    expected += item.prob * oracles::naive_kron(item.encoded.matrix(),
                                                item.target.matrix());
  CHECK((problem.rho.matrix() - expected).norm() < 1e-13);
  CHECK(problem.rho.dims() == std::vector<int>{3, 2});
  CHECK(problem.rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(min_eigenvalue(problem.rho) > -1e-12);
}

TEST_CASE("strategy operator traces to the identity over guesses") {
  std::mt19937_64 rng(31);
  const Strategy s = random_strategy(rng, 3, 2, 4);
  const HermitianOperator lam = strategy_operator(s, 3, 2);
  CHECK(lam.dims() == std::vector<int>{3, 2});
  const HermitianOperator reduced = partial_trace(lam, FactorSubset{1});
  CHECK((reduced.matrix() - ComplexMatrix::Identity(3, 3)).norm() < 1e-9);

  Strategy broken = s;
  broken.outcomes.pop_back();
  CHECK(mentions(
      thrown_message<ValidationError>([&] { broken.validate(3, 2); }),
      "does not sum to the identity"));

  broken = s;
  broken.outcomes[0].povm(0, 1) += std::complex<double>(0.0, 0.3);
  CHECK(mentions(
      thrown_message<ValidationError>([&] { broken.validate(3, 2); }),
      "not Hermitian"));

  broken = s;
  broken.outcomes[1].povm -= 2.0 * ComplexMatrix::Identity(3, 3);
  CHECK_THROWS_AS(broken.validate(3, 2), ValidationError);
}

TEST_CASE("average fidelity matches the explicit double sum") {
  std::mt19937_64 rng(47);
  const EstimationProblem problem = build_problem(mixed_qutrit_ensemble(rng));
  const Strategy s = random_strategy(rng, 3, 2, 3);

  double expected = 0.0;
  for (const EnsembleItem& item : problem.ensemble.items)
    for (const Strategy::Outcome& out : s.outcomes)
      expected += item.prob * trace_product(item.encoded.matrix(), out.povm) *
                  trace_product(out.guess.matrix(), item.target.matrix());

  const double f = average_fidelity(problem, s);
  CHECK(f == doctest::Approx(expected).epsilon(1e-10));
  CHECK(f >= 0.0);
  CHECK(f <= 1.0);
}

TEST_CASE("pure projector accepts only nearly normalized kets") {
  ComplexVector ket = ComplexVector::Zero(3);
  ket(1) = 1.0 + 5e-7;
  const HermitianOperator p = pure_projector(ket, {3});
  CHECK(p.trace() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(trace_product(p.matrix(), p.matrix()) ==
        doctest::Approx(1.0).epsilon(1e-12));

  ket(1) = 1.001;
  CHECK_THROWS_AS(pure_projector(ket, {3}), ValidationError);
  CHECK_THROWS_AS(pure_projector(ComplexVector::Zero(3), {3}),
                  ValidationError);
}

TEST_CASE("uniform pure-state family joint operator") {
  for (int d : {2, 3}) {
    const EstimationProblem problem = isotropic_problem(d);
    CHECK(problem.ensemble.symbolic);
    CHECK(problem.ensemble.d_a == d);
    CHECK(problem.ensemble.d_b == d);
    const ComplexMatrix expected =
        (ComplexMatrix::Identity(d * d, d * d) + flip_operator(d).matrix()) /
        (d * (d + 1.0));
    CHECK((problem.rho.matrix() - expected).norm() < 1e-14);
    CHECK(problem.rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(min_eigenvalue(problem.rho) > -1e-14);
  }
  CHECK_THROWS_AS(isotropic_problem(1), ValidationError);
}

TEST_CASE("flip-symmetric strategy family") {
  for (int d : {2, 3, 4}) {
    const EstimationProblem iso = isotropic_problem(d);
    for (double t : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      const HermitianOperator w = werner_operator(d, t);
      const HermitianOperator reduced = partial_trace(w, FactorSubset{1});
      CHECK((reduced.matrix() - ComplexMatrix::Identity(d, d)).norm() < 1e-12);
      CHECK(min_eigenvalue(w) > -1e-12);
      const double fidelity = trace_product(iso.rho.matrix(), w.matrix());
      CHECK(fidelity == doctest::Approx((1.0 + t) / (d + 1.0)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(werner_operator(2, 1.5), ValidationError);
  CHECK_THROWS_AS(werner_operator(1, 0.0), ValidationError);
}

TEST_CASE("maximally entangled basis") {
  const std::vector<HermitianOperator> psi = bell_states();
  REQUIRE(psi.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(psi[i].dims() == std::vector<int>{2, 2});
    for (size_t j = 0; j < 4; ++j) {
      const double overlap = trace_product(psi[i].matrix(), psi[j].matrix());
      CHECK(overlap == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
  CHECK(psi[0].matrix()(0, 3).real() == doctest::Approx(0.5));
  CHECK(psi[1].matrix()(0, 3).real() == doctest::Approx(-0.5));
  CHECK(psi[2].matrix()(1, 2).real() == doctest::Approx(0.5));
  CHECK(psi[3].matrix()(1, 2).real() == doctest::Approx(-0.5));
}

TEST_CASE("discrimination targets are classical labels") {
  const EstimationProblem problem = two_pure_problem(0.6);
  REQUIRE(problem.ensemble.items.size() == 2);
  CHECK(problem.ensemble.d_a == 2);
  CHECK(problem.ensemble.d_b == 2);
  for (int i = 0; i < 2; ++i) {
    const ComplexMatrix& tgt = problem.ensemble.items[i].target.matrix();
    CHECK(tgt(i, i).real() == doctest::Approx(1.0));
    CHECK(tgt.norm() == doctest::Approx(1.0));
  }
  const double cross =
      trace_product(problem.ensemble.items[0].encoded.matrix(),
                    problem.ensemble.items[1].encoded.matrix());
  CHECK(cross == doctest::Approx(0.36).epsilon(1e-12));

  CHECK_THROWS_AS(two_pure_problem(1.5), ValidationError);
  CHECK_THROWS_AS(discrimination_problem({}, {}), ValidationError);
  CHECK_THROWS_AS(
      discrimination_problem({1.0}, std::vector<HermitianOperator>{}),
      ValidationError);
}

TEST_CASE("copies ensemble tensor-powers the encoded side") {
  std::mt19937_64 rng(59);
  std::vector<HermitianOperator> states;
  for (int i = 0; i < 2; ++i)
    states.push_back(pure_projector(oracles::random_ket(rng, 2), {2}));
  const std::vector<double> probs{0.25, 0.75};

  const EstimationProblem problem = copies_problem(states, probs, 3);
  CHECK(problem.ensemble.d_a == 8);
  CHECK(problem.ensemble.d_b == 2);
  for (int i = 0; i < 2; ++i) {
    const ComplexMatrix& s = states[i].matrix();
    const ComplexMatrix cubed =
        oracles::naive_kron(s, oracles::naive_kron(s, s));
    CHECK((problem.ensemble.items[i].encoded.matrix() - cubed).norm() < 1e-13);
    CHECK((problem.ensemble.items[i].target.matrix() - s).norm() == 0.0);
  }

  const EstimationProblem single = copies_problem(states, probs, 1);
  CHECK((single.ensemble.items[0].encoded.matrix() - states[0].matrix())
            .norm() == 0.0);

  CHECK(mentions(thrown_message<SizeCapError>(
                     [&] { copies_problem(states, probs, 9); }),
                 "512 exceeds cap 256"));
  CHECK_THROWS_AS(copies_problem(states, probs, 0), ValidationError);
  CHECK_THROWS_AS(copies_problem(states, {0.5}, 2), ValidationError);
}

TEST_CASE("maximally entangled ensemble splits the encoded side") {
  const Ensemble e = bell_ensemble({0.4, 0.3, 0.2, 0.1});
  CHECK_NOTHROW(e.validate());
  CHECK(e.d_a == 4);
  CHECK(e.d_b == 4);
  REQUIRE(e.items.size() == 4);
  for (const EnsembleItem& item : e.items) {
    CHECK(item.encoded.dims() == std::vector<int>{2, 2});
    CHECK(item.target.dims() == std::vector<int>{4});
  }
  CHECK(e.items[0].prob == 0.4);
  CHECK_THROWS_AS(bell_ensemble({0.5, 0.5}), ValidationError);
}

TEST_CASE("nine-state product ensemble is orthogonal") {
  const Ensemble e = domino_ensemble();
  CHECK_NOTHROW(e.validate());
  CHECK(e.d_a == 9);
  CHECK(e.d_b == 9);
  REQUIRE(e.items.size() == 9);
  for (size_t i = 0; i < 9; ++i) {
    CHECK(e.items[i].prob == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
    CHECK(e.items[i].encoded.dims() == std::vector<int>{3, 3});
    for (size_t j = i + 1; j < 9; ++j) {
      const double overlap = trace_product(e.items[i].encoded.matrix(),
                                           e.items[j].encoded.matrix());
      CHECK(std::abs(overlap) < 1e-12);
    }
  }
  const EstimationProblem problem = build_problem(e);
  CHECK(problem.rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
}
