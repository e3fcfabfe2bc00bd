// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oplab/oplab.hpp"

using namespace oplab;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

MultNormOptions tol_opts(double tol) {
  MultNormOptions o;
  o.tol = tol;
  return o;
}

Grid symmetric_integers(int n) {
  std::vector<double> v;
  for (int k = 1; k <= n; ++k) {
    v.push_back(k);
    v.push_back(-k);
  }
  return Grid::line(v);
}

// Exhaustive minimal cover of a finite set by closed eps-balls; candidate centers are midpoints
// of pairs, which suffices in one dimension.
std::size_t exhaustive_cover(const std::vector<double>& pts, double eps) {
  std::vector<double> cand;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i; j < pts.size(); ++j)
      if (std::abs(pts[i] - pts[j]) <= 2 * eps) cand.push_back(0.5 * (pts[i] + pts[j]));
  for (std::size_t k = 1; k <= pts.size(); ++k) {
    std::vector<std::size_t> idx(k);
    std::function<bool(std::size_t, std::size_t)> rec = [&](std::size_t depth, std::size_t start) {
      if (depth == k) {
        for (double p : pts) {
          bool hit = false;
          for (std::size_t c : idx) hit = hit || std::abs(p - cand[c]) <= eps;
          if (!hit) return false;
        }
        return true;
      }
      for (std::size_t c = start; c < cand.size(); ++c) {
        idx[depth] = c;
        if (rec(depth + 1, c + 1)) return true;
      }
      return false;
    };
    if (rec(0, 0)) return k;
  }
  return pts.size();
}

void doi_identity(Outcome& o) {
  double worst = 0.0;
  for (const auto& f : {ScalarFn::abs(), ScalarFn::kappa(), ScalarFn::phi(2.0), ScalarFn::tanh_half()})
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      std::mt19937_64 rng(seed);
      const OperatorTriple t(random_hermitian(8, -5, 5, seed), random_hermitian(8, -5, 5, seed + 100),
                             random_general(8, 8, rng));
      const double ratio = doi_identity_residual(f, t) / doi_scale(f, t);
      worst = std::max(worst, ratio);
      o.require(ratio <= 1e-9, f.name() + " seed " + std::to_string(seed));
    }
  o.detail << "worst residual/scale " << worst;
}

void toral_values(Outcome& o) {
  const std::vector<std::pair<int, double>> expect{{2, 0.5}, {3, 2.0 / 3.0}, {4, 1.0}, {5, 1.2}};
  for (const auto& [n, v] : expect) {
    const auto c = mult_norm(toral_lambda(n), tol_opts(1e-5));
    o.detail << "n=" << n << ":" << c.upper.value << " ";
    o.require(std::abs(c.upper.value - v) <= 1e-4 && std::abs(c.lower.value - v) <= 1e-4, "n=" + std::to_string(n));
    o.require(verify_certificate(toral_lambda(n).matrix, c).ok(), "certificate n=" + std::to_string(n));
  }
}

void hilbert_truncations(Outcome& o) {
  double prev = 0.0;
  double last = 0.0;
  for (int n : {2, 4, 8, 16, 32, 64}) {
    const auto p = hilbert_multiplier(n);
    const auto c = mult_norm(p, tol_opts(1e-4));
    o.detail << "n=" << n << ":[" << c.lower.value << "," << c.upper.value << "] ";
    o.require(verify_certificate(p.matrix, c).ok(), "certificate n=" + std::to_string(n));
    o.require(c.upper.value <= pi / 2 + 1e-3, "ceiling n=" + std::to_string(n));
    o.require(c.upper.value >= prev, "monotone at n=" + std::to_string(n));
    prev = c.upper.value;
    last = c.lower.value;
  }
  o.require(last >= 1.3, "v(64) >= 1.3");
}

void periodization(Outcome& o) {
  const auto p = periodization_coefficients(64);
  o.detail << "sum " << p.sum_abs << " target " << periodization_target();
  o.require(std::abs(p.sum_abs - periodization_target()) <= 1e-3, "sum");
  for (int n = -64; n <= 64; ++n) o.require((n % 2 == 0 ? 1.0 : -1.0) * p.coeff(n) >= -1e-9, "sign at " + std::to_string(n));
}

void fa_hat_norm(Outcome& o) {
  for (double a : {0.5, 1.0, 2.0, 4.0}) {
    const auto f = ScalarFn::fa(a);
    const auto q = hat_norm_quadrature(f, 4000.0 / a, 0.05 / a);
    o.detail << "a=" << a << ":" << q.value << " ";
    o.require(q.value >= 1.0 / a - 1e-3 && q.value <= 2.0 / a + 1e-3, "a=" + format_double(a));
  }
}

void sampling_identities(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_real_distribution<double> ang(0.0, 2 * pi);
  std::normal_distribution<double> g;
  const auto c = BandlimitedFn::cosine(1.0, 1.0);
  double line_err = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double z = u(rng);
    line_err = std::max(line_err, std::abs(reconstruct_line(c, z, 200).value - std::cos(z)));
  }
  o.require(line_err <= 1e-3, "line reconstruction");
  double circle_err = 0.0;
  double circle_mass = 0.0;
  double line_mass = 0.0;
  for (int n = 1; n <= 8; ++n)
    for (int deg = 0; deg <= n; ++deg) {
      std::vector<cplx> coeffs(static_cast<std::size_t>(2 * deg + 1));
      for (auto& x : coeffs) x = cplx(g(rng), g(rng));
      const auto f = ScalarFn::trig(coeffs);
      for (int i = 0; i < 5; ++i) {
        const cplx z = std::polar(1.0, ang(rng));
        const cplx tau = std::polar(1.0, ang(rng));
        circle_err = std::max(circle_err, std::abs(reconstruct_circle(f, n, z, tau) - eval(f, z)));
        circle_mass = std::max(circle_mass, circle_kernel_mass(n, z, tau));
        line_mass = std::max(line_mass, line_kernel_mass(u(rng)));
      }
    }
  o.require(circle_err <= 1e-10, "circle reconstruction");
  o.require(circle_mass <= std::sqrt(2.0) + 1e-8, "circle kernel mass");
  o.require(line_mass <= std::sqrt(2.0) + 1e-8, "line kernel mass");
  o.detail << "line err " << line_err << ", circle err " << circle_err << ", masses " << line_mass << " / "
           << circle_mass;
}

void geometric_growth(Outcome& o) {
  std::vector<double> v;
  for (int m : {2, 4, 6, 8, 10}) {
    const Grid gm = Grid::geometric(1.0, 2.0, static_cast<std::size_t>(m + 1));
    const auto p = sum_ratio_problem(gm, gm);
    const auto c = mult_norm(p, tol_opts(1e-5));
    o.require(verify_certificate(p.matrix, c).ok(), "certificate m=" + std::to_string(m));
    v.push_back(c.upper.value);
    o.detail << "m=" << m << ":" << c.upper.value << " ";
  }
  for (std::size_t i = 1; i < v.size(); ++i) o.require(v[i] > v[i - 1], "strictly increasing");
  o.require(v.back() - v.front() >= 0.1, "v(10) - v(2) >= 0.1");
}

void kato_sweep(Outcome& o) {
  std::vector<double> x, y;
  double prev = 0.0;
  for (int k = 4; k <= 10; ++k) {
    const double d = std::ldexp(1.0, -k);
    const auto p = kato_point(1.0, d, tol_opts(1e-4));
    const auto& m = p.bundle.measured;
    o.require(m.norm_R <= 1.0 + 1e-9 && m.norm_commut <= d + 1e-9, "bundle k=" + std::to_string(k));
    o.require(bundle_valid(ScalarFn::abs(), p.bundle), "bundle recheck k=" + std::to_string(k));
    const double L = p.bundle.certified_lower;
    o.require(L / d >= prev, "L/delta nondecreasing at k=" + std::to_string(k));
    prev = L / d;
    x.push_back(d * std::log(2.0 + std::log(1.0 / d)));
    y.push_back(L);
    o.detail << "k=" << k << ":" << L / d << " ";
  }
  const auto fit = fit_through_origin(x, y);
  o.detail << "c=" << fit.c << " resid=" << fit.max_rel_residual;
  o.require(fit.c > 0.0, "fitted c > 0");
  o.require(fit.max_rel_residual <= 0.3, "fit residual <= 30%");
}

void bound_consistency(Outcome& o) {
  const auto F = CompactSetDescr::interval(-1, 1);
  const Grid probe = Grid::uniform(-1, 1, 2001);
  for (const auto& f : {ScalarFn::abs(), ScalarFn::kappa()}) {
    std::vector<double> lowers, integrals;
    for (int k = 3; k <= 8; ++k) {
      const double d = std::ldexp(1.0, -k);
      const auto g = kato_grids(1.0, d);
      const auto cert = mult_norm(difference_quotient_problem(f, g.lambda, g.mu), tol_opts(1e-4));
      const auto b = omega_lower_witness(f, g.lambda, g.mu, d, cert);
      o.require(bundle_valid(f, b), f.name() + " bundle k=" + std::to_string(k));
      const double lower = std::max(scalar_modulus(f, d, probe).value, b.certified_lower);
      const auto up = omega_upper_net(f, F, d, d / 2);
      o.require(lower <= up.rhs, f.name() + " lower <= net upper at k=" + std::to_string(k));
      lowers.push_back(lower);
      integrals.push_back(modnep_upper_integral(f, d, probe).value);
    }
    double cstar = 0.0;
    for (std::size_t i = 0; i < lowers.size(); ++i) cstar = std::max(cstar, lowers[i] / integrals[i]);
    for (std::size_t i = 0; i < lowers.size(); ++i)
      o.require(lowers[i] <= 2.0 * cstar * integrals[i], f.name() + " integral ordering");
    o.detail << f.name() << " c*=" << cstar << " ";
  }
}

void entropy_and_qcom(Outcome& o) {
  const auto F = CompactSetDescr::interval(0, 1);
  const auto e = epsilon_entropy(F, 0.1);
  o.require(e.cardinality == 5, "cardinality 5");
  o.require(std::abs(e.K - std::log(5.0)) <= 1e-15, "K = log 5");
  for (int i = 0; i <= 10000; ++i) {
    const double x = i / 10000.0;
    double best = 1e300;
    for (double c : e.net) best = std::min(best, std::abs(x - c));
    if (best > 0.1 + 1e-12) {
      o.require(false, "net covers F");
      break;
    }
  }
  // Five points of F pairwise more than 0.2 apart need five balls, so four cannot cover F.
  const std::size_t need = exhaustive_cover(e.packing, 0.1);
  o.require(e.packing.size() == 5 && need == 5, "no 4-point cover");
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const OperatorTriple t(random_hermitian(6, 0, 1, seed), random_hermitian(6, 0, 1, seed + 50), random_general(6, 6, rng));
    const double slope = -1.5 + 0.5 * static_cast<double>(seed);
    const auto r = qcom_ratio(ScalarFn::linear(slope, 0.25), t, F);
    const double K = r.params.at("K").get<double>();
    const double expect = slope == 0.0 ? 0.0 : 1.0 / (1.0 + K);
    worst = std::max({worst, std::abs(r.ratio - expect), std::abs(r.lhs - std::abs(slope) * op_norm(t.commutator()))});
  }
  o.require(worst <= 1e-10, "qcom linear ratio");
  o.detail << "cardinality " << e.cardinality << ", exhaustive minimum " << need << ", qcom deviation " << worst;
}

void logn_law(Outcome& o) {
  std::vector<double> lhs, ratio;
  for (int n : {4, 8, 16, 32}) {
    const auto r = logn_sharp_constant(symmetric_integers(n), tol_opts(1e-5));
    const double q = r.lhs / (1.0 + std::log(2.0 * n));
    lhs.push_back(r.lhs);
    ratio.push_back(q);
    o.detail << "n=" << n << ":" << r.lhs << " ";
  }
  for (std::size_t i = 1; i < lhs.size(); ++i) o.require(lhs[i] > lhs[i - 1], "strictly increasing");
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  o.detail << "band [" << *lo << "," << *hi << "]";
  o.require(*lo > 0.0 && *hi / *lo <= 4.0, "band C/c <= 4");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"doi identity residuals", doi_identity},
      {"exact toral multiplier values", toral_values},
      {"hilbert truncations", hilbert_truncations},
      {"periodization coefficients", periodization},
      {"f_a hat norm", fa_hat_norm},
      {"sampling identities", sampling_identities},
      {"geometric grid growth", geometric_growth},
      {"kato sweep", kato_sweep},
      {"bound consistency", bound_consistency},
      {"entropy and qcom", entropy_and_qcom},
      {"log n law", logn_law},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << std::setw(2) << i + 1 << " " << criteria[i].first << " ("
              << std::fixed << std::setprecision(1) << secs << " s) " << std::defaultfloat << std::setprecision(6)
              << o.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
