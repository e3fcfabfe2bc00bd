#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oplab/schur.hpp"

using namespace oplab;
using Catch::Matchers::WithinAbs;

namespace {

MultiplierProblem problem(GeneralMatrix m) { return {std::move(m), "test", std::nullopt}; }

MultNormOptions opts(double tol) {
  MultNormOptions o;
  o.tol = tol;
  return o;
}

void require_valid(const GeneralMatrix& m, const MultiplierCertificate& c) {
  const auto check = verify_certificate(m, c);
  CHECK(check.lower_ok);
  CHECK(check.upper_ok);
  CHECK(check.order_ok);
  CHECK(c.gap <= c.tol * std::max(1.0, c.upper.value) + 1e-12);
  CHECK(c.converged);
}

}  // namespace

TEST_CASE("multiplier norm examples", "[schur]") {
  const GeneralMatrix ones = GeneralMatrix::Ones(3, 3);
  const auto c = mult_norm(problem(ones), opts(1e-6));
  require_valid(ones, c);
  CHECK_THAT(c.upper.value, WithinAbs(1.0, 1e-6));

  const GeneralMatrix id = GeneralMatrix::Identity(2, 2);
  const auto ci = mult_norm(problem(id), opts(1e-6));
  require_valid(id, ci);
  CHECK_THAT(ci.upper.value, WithinAbs(1.0, 1e-6));

  const GeneralMatrix zero = GeneralMatrix::Zero(2, 3);
  const auto cz = mult_norm(problem(zero));
  CHECK(cz.upper.value == 0.0);
  CHECK(verify_certificate(zero, cz).ok());
}

TEST_CASE("toral multipliers match their closed form", "[schur]") {
  CHECK(toral_lambda_exact(2) == 0.5);
  CHECK_THAT(toral_lambda_exact(3), WithinAbs(2.0 / 3.0, 1e-15));
  CHECK(toral_lambda_exact(4) == 1.0);
  CHECK_THAT(toral_lambda_exact(5), WithinAbs(1.2, 1e-15));
  for (int n : {2, 3, 4, 5, 6}) {
    const auto p = toral_lambda(n);
    const auto c = mult_norm(p, opts(1e-5));
    require_valid(p.matrix, c);
    CHECK_THAT(c.upper.value, WithinAbs(toral_lambda_exact(n), 1e-4));
  }
  CHECK_THROWS_AS(toral_lambda(0), PreconditionError);
}

TEST_CASE("positive semidefinite matrices have norm equal to the largest diagonal entry", "[schur]") {
  // Classical fact used as an independent oracle: for M >= 0, ||M||_mult = max_i M_ii.
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const Eigen::Index n = 2 + trial;
    const GeneralMatrix g = random_general(n, n + 1, rng);
    const GeneralMatrix m = g * g.adjoint();
    const auto c = mult_norm(problem(m), opts(1e-6));
    require_valid(m, c);
    const double expect = m.diagonal().real().maxCoeff();
    CHECK_THAT(c.upper.value, WithinAbs(expect, 2e-6 * expect));
  }
}

TEST_CASE("rank-one multipliers factor exactly", "[schur]") {
  std::mt19937_64 rng(5);
  const GeneralMatrix x = random_general(4, 1, rng);
  const GeneralMatrix y = random_general(6, 1, rng);
  const GeneralMatrix m = x * y.adjoint();
  const auto c = mult_norm(problem(m), opts(1e-6));
  require_valid(m, c);
  const double expect = x.cwiseAbs().maxCoeff() * y.cwiseAbs().maxCoeff();
  CHECK_THAT(c.upper.value, WithinAbs(expect, 2e-6 * expect));
}

TEST_CASE("multiplier norm preconditions", "[schur]") {
  CHECK_THROWS_AS(mult_norm(problem(GeneralMatrix::Ones(2, 2)), opts(1e-9)), PreconditionError);
  CHECK_THROWS_AS(mult_norm(problem(GeneralMatrix::Ones(2, 2)), opts(0.1)), PreconditionError);
  MultNormOptions small;
  small.cap = 3;
  CHECK_THROWS_AS(mult_norm(problem(GeneralMatrix::Ones(4, 2)), small), PreconditionError);
  GeneralMatrix bad = GeneralMatrix::Ones(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(mult_norm(problem(bad)), PreconditionError);
}

TEST_CASE("multiplier norm is deterministic", "[schur]") {
  const auto p = hilbert_multiplier(4);
  const auto a = mult_norm(p);
  const auto b = mult_norm(p);
  CHECK(a.upper.value == b.upper.value);
  CHECK(a.lower.value == b.lower.value);
  CHECK(to_json(a) == to_json(b));
}

TEST_CASE("lower search examples", "[schur]") {
  std::mt19937_64 rng(8);
  const GeneralMatrix m = random_general(5, 4, rng);
  const auto r = mult_lower_search(problem(m), 4, 1);
  CHECK(r.value >= op_norm(m) / op_norm(GeneralMatrix::Ones(5, 4)) - 1e-12);

  GeneralMatrix single = GeneralMatrix::Zero(3, 3);
  single(1, 2) = cplx(3.0, -4.0);
  CHECK_THAT(mult_lower_search(problem(single), 3, 0).value, WithinAbs(5.0, 1e-10));

  const auto h = hilbert_multiplier(16);
  const auto low = mult_lower_search(h, 6, 3);
  CHECK(low.value >= 1.0);
  CHECK(low.value <= std::numbers::pi / 2);
  const auto cert = mult_norm(h, opts(1e-4));
  CHECK(low.value <= cert.upper.value + 1e-8);
  CHECK_THROWS_AS(mult_lower_search(h, 0, 0), PreconditionError);
}

TEST_CASE("builders", "[schur]") {
  CHECK(hilbert_multiplier(0).matrix == GeneralMatrix::Zero(1, 1));
  const auto h1 = hilbert_multiplier(1).matrix;
  CHECK(h1(2, 0) == cplx(0.5));
  CHECK(h1(0, 2) == cplx(-0.5));
  CHECK_THROWS_AS(hilbert_multiplier(-1), PreconditionError);

  CHECK(sum_ratio_problem(Grid::line({1}), Grid::line({1})).matrix == GeneralMatrix::Zero(1, 1));
  CHECK_THAT(sum_ratio_problem(Grid::line({2}), Grid::line({1})).matrix(0, 0).real(), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THROWS_AS(sum_ratio_problem(Grid::line({-1}), Grid::line({1})), DomainError);
  const auto d = difference_quotient_problem(ScalarFn::abs(), Grid::line({-1}), Grid::line({1}));
  CHECK(d.matrix == GeneralMatrix::Zero(1, 1));
  REQUIRE(d.provenance.has_value());
  CHECK(d.provenance->fn == "abs");
}

TEST_CASE("submatrix monotonicity on nested Hilbert truncations", "[schur]") {
  double prev = 0.0;
  for (int n : {1, 2, 4, 8, 12}) {
    const auto c = mult_norm(hilbert_multiplier(n), opts(1e-4));
    CHECK(c.upper.value >= prev - 2e-4);
    CHECK(c.upper.value <= std::numbers::pi / 2 + 1e-4);
    prev = c.upper.value;
  }
  std::mt19937_64 rng(3);
  const GeneralMatrix m = random_general(7, 6, rng);
  const double full = mult_norm(problem(m), opts(1e-5)).upper.value;
  const double sub = mult_norm(problem(m.topLeftCorner(5, 4)), opts(1e-5)).lower.value;
  CHECK(sub <= full + 1e-5);
}

TEST_CASE("submultiplicativity, transpose symmetry and the sup bound", "[schur]") {
  std::mt19937_64 rng(31);
  const double tol = 1e-5;
  for (int trial = 0; trial < 5; ++trial) {
    const GeneralMatrix a = random_general(6, 6, rng);
    const GeneralMatrix b = random_general(6, 6, rng);
    const auto ca = mult_norm(problem(a), opts(tol));
    const auto cb = mult_norm(problem(b), opts(tol));
    const auto cab = mult_norm(problem(schur_product(a, b)), opts(tol));
    CHECK(cab.upper.value <= ca.upper.value * cb.upper.value + 3 * tol);
    const auto ct = mult_norm(problem(a.transpose()), opts(tol));
    CHECK_THAT(ct.upper.value, WithinAbs(ca.upper.value, 2 * tol * std::max(1.0, ca.upper.value)));
    const auto cc = mult_norm(problem(a.conjugate()), opts(tol));
    CHECK_THAT(cc.upper.value, WithinAbs(ca.upper.value, 2 * tol * std::max(1.0, ca.upper.value)));
    CHECK(ca.upper.value >= a.cwiseAbs().maxCoeff() - tol);
    require_valid(a, ca);
  }
  CHECK_THROWS_AS(schur_product(GeneralMatrix::Ones(2, 2), GeneralMatrix::Ones(2, 3)), PreconditionError);
}

TEST_CASE("geometric grid sum-ratio values grow", "[schur]") {
  auto v = [](int m) {
    const Grid g = Grid::geometric(1.0, 2.0, static_cast<std::size_t>(m + 1));
    return mult_norm(sum_ratio_problem(g, g), opts(1e-4)).upper.value;
  };
  const double v2 = v(2), v6 = v(6), v10 = v(10);
  CHECK(v2 <= v6 + 2e-4);
  CHECK(v6 <= v10 + 2e-4);
  CHECK(v10 > v2);
}

TEST_CASE("certificate verification rejects tampering", "[schur]") {
  const auto p = toral_lambda(4);
  auto c = mult_norm(p, opts(1e-5));
  CHECK(verify_certificate(p.matrix, c).ok());
  auto raised = c;
  raised.lower.value += 0.1;
  CHECK_FALSE(verify_certificate(p.matrix, raised).lower_ok);
  auto lowered = c;
  lowered.upper.value -= 0.1;
  CHECK_FALSE(verify_certificate(p.matrix, lowered).upper_ok);
  auto broken = c;
  broken.upper.row_vectors(0, 0) += 0.5;
  CHECK_FALSE(verify_certificate(p.matrix, broken).upper_ok);
  const auto j = to_json(c);
  CHECK(j.at("label") == "toral-lambda n=4");
}
