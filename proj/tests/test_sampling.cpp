#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oplab/sampling.hpp"

using namespace oplab;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double pi = std::numbers::pi;

MultNormOptions opts(double tol) {
  MultNormOptions o;
  o.tol = tol;
  return o;
}

}  // namespace

TEST_CASE("line reconstruction examples", "[sampling]") {
  const double sigma = 2.0;
  const auto s = BandlimitedFn::sine(sigma, sigma);
  const auto hit = reconstruct_line(s, pi / (2 * sigma), 50);
  CHECK_THAT(hit.value.real(), WithinAbs(1.0, 1e-12));
  CHECK_THAT(hit.value.imag(), WithinAbs(0.0, 1e-12));

  const auto c = BandlimitedFn::cosine(1.0, 1.0);
  const auto r = reconstruct_line(c, 0.3, 200);
  CHECK(std::abs(r.value - std::cos(0.3)) <= 1e-3);
  CHECK(std::abs(r.value - std::cos(0.3)) <= r.tail_bound);

  const auto zero = BandlimitedFn::constant(0.0, 1.0);
  CHECK(std::abs(reconstruct_line(zero, 0.7, 20).value) == 0.0);
  CHECK_THROWS_AS(BandlimitedFn::cosine(3.0, 1.0), PreconditionError);
}

TEST_CASE("line reconstruction error decays like 1/N", "[sampling]") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const std::vector<BandlimitedFn> family{BandlimitedFn::sine(1.0, 1.0), BandlimitedFn::cosine(0.7, 1.0),
                                          BandlimitedFn::exponential(1.0, 1.5),
                                          BandlimitedFn(ScalarFn::trig({0.2, 1.0, 0.5, cplx(0, 0.3), -0.1}), 0.5, 1.0)};
  for (const auto& f : family)
    for (int trial = 0; trial < 5; ++trial) {
      const double z = u(rng);
      const auto a = reconstruct_line(f, z, 100, 0.1);
      const auto b = reconstruct_line(f, z, 200, 0.1);
      CHECK(std::abs(a.value - f(z)) <= a.tail_bound);
      CHECK(std::abs(b.value - f(z)) <= b.tail_bound);
      CHECK_THAT(b.tail_bound / a.tail_bound, WithinAbs((100 - 0.5) / (200 - 0.5), 1e-12));
    }
}

TEST_CASE("line kernel", "[sampling]") {
  CHECK(line_kernel(0.0) == 1.0);
  CHECK_THAT(line_kernel(1e-7), WithinAbs(1.0, 1e-12));
  const double w = 0.8;
  CHECK_THAT(line_kernel(w), WithinAbs(std::sin(w) * std::sin(w) * std::cos(w) / (w * w), 1e-15));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng);
    const double mass = line_kernel_mass(x);
    CHECK_THAT(mass, WithinAbs(std::abs(std::cos(x)) + std::abs(std::sin(x)), 1e-8));
    CHECK(mass <= std::sqrt(2.0) + 1e-8);
  }
}

TEST_CASE("dirichlet kernels", "[sampling]") {
  CHECK(dirichlet_eval(5, 1.0) == cplx(1.0));
  CHECK(std::abs(dirichlet_eval(2, -1.0)) <= 1e-15);
  const cplx z = std::polar(1.0, 0.4);
  CHECK(std::abs(dirichlet_eval(3, z) - (1.0 + z + z * z) / 3.0) <= 1e-15);
  const cplx near = std::polar(1.0, 1e-5);
  CHECK(std::abs(dirichlet_eval(4, near) - (1.0 + near + near * near + near * near * near) / 4.0) <= 1e-15);
  CHECK_THROWS_AS(dirichlet_eval(0, z), PreconditionError);
}

TEST_CASE("circle reconstruction and kernel mass", "[sampling]") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ang(0.0, 2 * pi);
  std::normal_distribution<double> g;
  for (int n : {1, 2, 3, 5}) {
    std::vector<cplx> coeffs(static_cast<std::size_t>(2 * n + 1));
    for (auto& c : coeffs) c = cplx(g(rng), g(rng));
    const auto f = ScalarFn::trig(coeffs);
    for (int i = 0; i < 20; ++i) {
      const cplx z = std::polar(1.0, ang(rng));
      const cplx tau = std::polar(1.0, ang(rng));
      CHECK(std::abs(reconstruct_circle(f, n, z, tau) - eval(f, z)) <= 1e-10);
      // Exact row mass: (|z^{2n} + 1| + |z^{2n} - 1|)/2 for tau = 1.
      const cplx p = std::pow(z, 2 * n);
      const double mass = circle_kernel_mass(n, z);
      CHECK_THAT(mass, WithinAbs(0.5 * (std::abs(p + 1.0) + std::abs(p - 1.0)), 1e-10));
      CHECK(mass <= std::sqrt(2.0) + 1e-8);
    }
  }
  CHECK_THROWS_AS(reconstruct_circle(ScalarFn::monomial(3), 2, 1.0), PreconditionError);
}

TEST_CASE("line transfer brackets", "[sampling]") {
  const auto one = BandlimitedFn::constant(1.0, 1.0);
  const auto b = transfer_line(ProductKernel{one, one}, 3, 0.0, 0.0, opts(1e-6));
  CHECK_THAT(b.grid_upper, WithinAbs(1.0, 1e-5));
  CHECK(b.lower <= 1.0 + 1e-6);
  CHECK(b.upper >= 1.0);
  CHECK_THAT(b.upper, WithinAbs(2.0, 2e-5));

  const double sigma = 1.0;
  const auto e = BandlimitedFn::exponential(sigma, sigma);
  const auto ebar = BandlimitedFn(ScalarFn::monomial(-1), sigma, sigma);
  const auto r1 = transfer_line(ProductKernel{e, ebar}, 3, 0.2, -0.1, opts(1e-6));
  CHECK_THAT(r1.grid_upper, WithinAbs(1.0, 1e-5));
  CHECK_THAT(r1.grid_lower, WithinAbs(1.0, 1e-5));

  const auto dd = transfer_line(DividedDifferenceKernel{BandlimitedFn::sine(1.0, 1.0)}, 4, 0.1, 0.1, opts(1e-4));
  CHECK(dd.lower <= dd.upper);
  CHECK(dd.lower >= 0.0);
  CHECK(verify_certificate(sample_line_kernel(DividedDifferenceKernel{BandlimitedFn::sine(1.0, 1.0)}, 4, 0.1, 0.1),
                           dd.cert)
            .ok());
  CHECK_THROWS_AS(transfer_line(ProductKernel{one, one}, -1), PreconditionError);
}

TEST_CASE("circle transfer brackets", "[sampling]") {
  const auto b = transfer_circle(CirclePolyKernel::constant(1.0), 1, 1.0, 1.0, opts(1e-6));
  CHECK_THAT(b.lower, WithinAbs(1.0, 1e-5));
  CHECK_THAT(b.upper, WithinAbs(2.0, 2e-5));
  const auto id = CirclePolyKernel::divided_difference(ScalarFn::monomial(1));
  CHECK(std::abs(id(std::polar(1.0, 0.3), std::polar(1.0, 2.0)) - 1.0) <= 1e-15);

  const auto f = ScalarFn::trig({0.0, 0.0, 0.0, 1.0, 1.0});
  const auto k = CirclePolyKernel::divided_difference(f);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ang(0.0, 2 * pi);
  for (int i = 0; i < 20; ++i) {
    const cplx z = std::polar(1.0, ang(rng)), w = std::polar(1.0, ang(rng));
    CHECK(std::abs(k(z, w) - (eval(f, z) - eval(f, w)) / (z - w)) <= 1e-12);
  }
  const auto t = transfer_circle(k, 2, 1.0, 1.0, opts(1e-5));
  // Direct value on T_32, a finer finite sample of the same kernel.
  const Grid fine = Grid::roots_of_unity(32);
  const auto direct = mult_norm({sample_circle_kernel(k, fine, fine), "T32", std::nullopt}, opts(1e-5));
  CHECK(t.lower <= direct.upper.value + 1e-4);
  CHECK(direct.lower.value <= t.upper + 1e-4);
  CHECK_NOTHROW(transfer_circle(k, 1, 1.0, 1.0, opts(1e-4)));  // 1 + z + w has support 1
  const auto cube = CirclePolyKernel::divided_difference(ScalarFn::monomial(3));
  CHECK_THROWS_AS(transfer_circle(cube, 1), PreconditionError);
}

TEST_CASE("sharpness brackets on integer windows", "[sampling]") {
  const auto lin = commutator_sharpness_z(ScalarFn::linear(2.0), -5, 5, 0.5, opts(1e-5));
  CHECK(lin.lower <= 2.0 + 1e-4);
  CHECK(lin.upper >= 2.0 - 1e-4);
  const auto ab = commutator_sharpness_z(ScalarFn::abs(), -8, 8, 0.5, opts(1e-4));
  CHECK(ab.lower <= ab.upper);
  CHECK(ab.lower >= 0.5 - 1e-3);  // sup of the entries is 1
  const auto par = commutator_sharpness_z(parity_fn(), -4, 4, 0.5, opts(1e-4));
  CHECK(par.lower <= par.upper);
  CHECK(par.upper >= 2.0 - 1e-3);  // adjacent entries have modulus 2
  CHECK_THROWS_AS(commutator_sharpness_z(ScalarFn::abs(), -2, 2, 0.7), PreconditionError);
}

TEST_CASE("lacunary profiles", "[sampling]") {
  const auto sq = besN_profile(ScalarFn::monomial(2), 4);
  CHECK(sq[0].partial_sum == 0.0);
  CHECK(sq[1].partial_sum == 0.0);
  CHECK(sq[2].partial_sum == 2.0);
  CHECK(sq[4].partial_sum == 2.0);
  for (const auto& p : besN_profile(ScalarFn::trig({0.0}), 5)) CHECK(p.partial_sum == 0.0);
  std::vector<int> signs(6, 1);
  std::vector<double> w;
  for (int j = 0; j <= 5; ++j) w.push_back(std::ldexp(1.0, -2 * j));
  const auto lac = besN_profile(ScalarFn::lacunary(signs, w), 7);
  CHECK_THAT(lac.back().partial_sum, WithinAbs(2.0 * (1.0 - std::ldexp(1.0, -6)), 1e-14));
}

TEST_CASE("lacunary search", "[sampling]") {
  const auto a = lacunary_search(2, 3, 5, 1, opts(1e-3));
  const auto b = lacunary_search(2, 3, 5, 2, opts(1e-3));
  REQUIRE(a.trials.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.trials[i].value == b.trials[i].value);
    CHECK(a.trials[i].signs == b.trials[i].signs);
    CHECK(a.trials[i].value > 0.0);
  }
  CHECK(a.best.seed == b.best.seed);
  for (const auto& t : a.trials) CHECK(t.value <= a.best.value);
  CHECK_THROWS_AS(lacunary_search(7, 1, 0), PreconditionError);
}
