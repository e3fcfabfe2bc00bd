#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "oplab/errors.hpp"
#include "oplab/fourier_hat.hpp"
#include "oplab/parallel.hpp"
#include "oplab/report.hpp"
#include "oplab/scalar_fn.hpp"
#include "oplab/schur.hpp"

namespace oplab {

// ---------------------------------------------------------------- band-limited functions on R

// f(x) = sum_k c_k e^{i k omega x}, of exponential type deg * omega <= sigma.
class BandlimitedFn {
 public:
  BandlimitedFn(ScalarFn poly, double omega, double sigma) : poly_(std::move(poly)), omega_(omega), sigma_(sigma) {
    if (!(omega > 0.0) || !(sigma > 0.0)) throw PreconditionError("BandlimitedFn: omega and sigma must be positive");
    const auto t = trig_coefficients(poly_);
    int support = 0;
    for (int k = -t.degree; k <= t.degree; ++k)
      if (t.coeff(k) != cplx{}) support = std::max(support, std::abs(k));
    if (support * omega > sigma * (1.0 + 1e-12))
      throw PreconditionError("BandlimitedFn: declared sigma is below the spectral support " + fmt_num(support * omega));
    coeffs_ = t;
  }

  static BandlimitedFn sine(double freq, double sigma) {
    return BandlimitedFn(ScalarFn::trig({cplx(0.0, 0.5), 0.0, cplx(0.0, -0.5)}), freq, sigma);
  }
  static BandlimitedFn cosine(double freq, double sigma) {
    return BandlimitedFn(ScalarFn::trig({0.5, 0.0, 0.5}), freq, sigma);
  }
  static BandlimitedFn exponential(double freq, double sigma) { return BandlimitedFn(ScalarFn::monomial(1), freq, sigma); }
  static BandlimitedFn constant(cplx c, double sigma) { return BandlimitedFn(ScalarFn::trig({c}), 1.0, sigma); }

  double sigma() const { return sigma_; }
  double omega() const { return omega_; }

  cplx operator()(double x) const {
    cplx acc = 0.0;
    for (int k = -coeffs_.degree; k <= coeffs_.degree; ++k)
      if (coeffs_.coeff(k) != cplx{}) acc += coeffs_.coeff(k) * std::exp(cplx(0.0, k * omega_ * x));
    return acc;
  }

  cplx derivative(double x) const {
    cplx acc = 0.0;
    for (int k = -coeffs_.degree; k <= coeffs_.degree; ++k)
      acc += coeffs_.coeff(k) * cplx(0.0, k * omega_) * std::exp(cplx(0.0, k * omega_ * x));
    return acc;
  }

  // Upper bound on sup |f| over R.
  double sup_bound() const {
    double s = 0.0;
    for (auto c : coeffs_.coeffs) s += std::abs(c);
    return s;
  }

  // Values at the sampling nodes pi n / (2 sigma) + alpha, |n| <= N.
  std::vector<cplx> samples(int N, double alpha = 0.0) const {
    std::vector<cplx> v;
    for (int n = -N; n <= N; ++n) v.push_back((*this)(std::numbers::pi * n / (2.0 * sigma_) + alpha));
    return v;
  }

 private:
  ScalarFn poly_;
  double omega_;
  double sigma_;
  fn::TrigPoly coeffs_;
};

// sin^2(w) cos(w) / w^2 with the removable singularity at w = 0.
inline double line_kernel(double w) {
  if (std::abs(w) < 1e-6) return 1.0 - 5.0 * w * w / 6.0;
  const double s = std::sin(w);
  return s * s * std::cos(w) / (w * w);
}

struct Reconstruction {
  cplx value;
  double tail_bound = 0.0;
};

// f(z) = sum_n K(sigma (z - alpha) - pi n / 2) f(pi n / (2 sigma) + alpha); the 2N+1 terms nearest z.
inline Reconstruction reconstruct_line(const BandlimitedFn& f, double z, int N, double alpha = 0.0) {
  if (N < 1) throw PreconditionError("reconstruct_line: N must be >= 1");
  const double sigma = f.sigma();
  const double x = sigma * (z - alpha);
  const auto n0 = static_cast<long>(std::llround(2.0 * x / std::numbers::pi));
  cplx acc = 0.0;
  for (long n = n0 - N; n <= n0 + N; ++n) {
    const double w = x - std::numbers::pi * static_cast<double>(n) / 2.0;
    acc += line_kernel(w) * f(std::numbers::pi * static_cast<double>(n) / (2.0 * sigma) + alpha);
  }
  const double tail = (8.0 / (std::numbers::pi * std::numbers::pi)) * f.sup_bound() / (N - 0.5);
  return {acc, tail};
}

// sum_n |sin^2(w_n) cos(w_n)| / w_n^2 over all n, w_n = x - pi n / 2: a window of 2K+1 terms
// per parity plus the exact trigamma tails.
inline double line_kernel_mass(double x, int K = 50) {
  double total = 0.0;
  for (int parity = 0; parity < 2; ++parity) {
    const double xs = x - parity * std::numbers::pi / 2.0;  // w = xs - pi k
    const double amp = parity == 0 ? std::pow(std::sin(x), 2) * std::abs(std::cos(x))
                                   : std::pow(std::cos(x), 2) * std::abs(std::sin(x));
    const auto k0 = static_cast<long>(std::llround(xs / std::numbers::pi));
    for (long k = k0 - K; k <= k0 + K; ++k)
      total += std::abs(line_kernel(xs - std::numbers::pi * static_cast<double>(k)));
    const double y = xs / std::numbers::pi;
    const double right = trigamma(static_cast<double>(k0 + K + 1) - y);
    const double left = trigamma(y - static_cast<double>(k0 - K - 1));
    total += amp * (right + left) / (std::numbers::pi * std::numbers::pi);
  }
  return total;
}

// ---------------------------------------------------------------- band-limited kernels on R^2

struct ProductKernel {
  BandlimitedFn f, g;  // f(x) g(y)
};
struct DividedDifferenceKernel {
  BandlimitedFn f;  // (f(x) - f(y))/(x - y), f'(x) on the diagonal
};
using BandlimitedKernel = std::variant<ProductKernel, DividedDifferenceKernel>;

inline double kernel_sigma(const BandlimitedKernel& k) {
  return std::visit(overloaded{[](const ProductKernel& p) { return std::max(p.f.sigma(), p.g.sigma()); },
                               [](const DividedDifferenceKernel& d) { return d.f.sigma(); }},
                    k);
}

inline cplx kernel_eval(const BandlimitedKernel& k, double x, double y) {
  return std::visit(overloaded{[&](const ProductKernel& p) { return p.f(x) * p.g(y); },
                               [&](const DividedDifferenceKernel& d) {
                                 return x == y ? d.f.derivative(x) : (d.f(x) - d.f(y)) / (x - y);
                               }},
                    k);
}

struct TransferBracket {
  double grid_lower = 0.0;
  double grid_upper = 0.0;
  double lower = 0.0;  // continuum lower bound
  double upper = 0.0;  // continuum upper rule: 2 x grid value
  std::string caveat;
  MultiplierCertificate cert;
};

// Samples Phi on {pi m/(2 sigma) + alpha} x {pi n/(2 sigma) + beta}, |m|, |n| <= W.
inline GeneralMatrix sample_line_kernel(const BandlimitedKernel& k, int W, double alpha = 0.0, double beta = 0.0) {
  const double sigma = kernel_sigma(k);
  const int d = 2 * W + 1;
  GeneralMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      m(i, j) = kernel_eval(k, std::numbers::pi * (i - W) / (2.0 * sigma) + alpha,
                            std::numbers::pi * (j - W) / (2.0 * sigma) + beta);
  return m;
}

inline TransferBracket transfer_line(const BandlimitedKernel& k, int W, double alpha = 0.0, double beta = 0.0,
                                     const MultNormOptions& opts = {}) {
  if (W < 0) throw PreconditionError("transfer_line: window half-width must be >= 0");
  const MultiplierProblem p{sample_line_kernel(k, W, alpha, beta), "line window", std::nullopt};
  TransferBracket b;
  b.cert = mult_norm(p, opts);
  b.grid_lower = b.cert.lower.value;
  b.grid_upper = b.cert.upper.value;
  b.lower = b.grid_lower;
  b.upper = 2.0 * b.grid_upper;
  b.caveat = "window lower bound of the grid norm; the upper rule assumes the full grid norm equals the window supremum";
  return b;
}

// ---------------------------------------------------------------- circle kernels

// d_n(z) = (1/n)(z^n - 1)/(z - 1), d_n(1) = 1.
inline cplx dirichlet_eval(int n, cplx z) {
  if (n < 1) throw PreconditionError("dirichlet_eval: n must be >= 1");
  if (std::abs(z - 1.0) < 1e-3) {
    cplx acc = 0.0, p = 1.0;
    for (int k = 0; k < n; ++k) {
      acc += p;
      p *= z;
    }
    return acc / static_cast<double>(n);
  }
  return (std::pow(z, n) - 1.0) / (static_cast<double>(n) * (z - 1.0));
}

// F_n(z, zeta) = (zeta/z)^n d_{2n}(zeta/z) d_{4n}(z/zeta). The (zeta/z)^n factor comes from
// reproducing zeta^n f(zeta) d_{2n}(zeta/z), which is analytic of degree < 4n.
inline cplx f_n_kernel(int n, cplx z, cplx zeta) {
  const cplx q = zeta / z;
  return std::pow(q, n) * dirichlet_eval(2 * n, q) * dirichlet_eval(4 * n, z / zeta);
}

inline Grid sampling_circle(int n, cplx tau = 1.0) { return Grid::roots_of_unity(static_cast<std::size_t>(4 * n), tau); }

// f(z) = sum over zeta in tau T_{4n} of f(zeta) F_n(z, zeta), for trig polynomials of degree <= n.
inline cplx reconstruct_circle(const ScalarFn& f, int n, cplx z, cplx tau = 1.0) {
  const auto t = trig_coefficients(f);
  if (t.degree > n) throw PreconditionError("reconstruct_circle: degree exceeds n");
  cplx acc = 0.0;
  const Grid g = sampling_circle(n, tau);
  for (cplx zeta : g.circle_points()) acc += eval(f, zeta) * f_n_kernel(n, z, zeta);
  return acc;
}

inline double circle_kernel_mass(int n, cplx z, cplx tau = 1.0) {
  double s = 0.0;
  const Grid g = sampling_circle(n, tau);
  for (cplx zeta : g.circle_points()) s += std::abs(f_n_kernel(n, z, zeta));
  return s;
}

// Phi(z, w) = sum C(j, k) z^j w^k with |j|, |k| <= degree; C is indexed from -degree.
struct CirclePolyKernel {
  int degree = 0;
  GeneralMatrix coeffs;

  static CirclePolyKernel constant(cplx c, int degree = 0) {
    CirclePolyKernel k{degree, GeneralMatrix::Zero(2 * degree + 1, 2 * degree + 1)};
    k.coeffs(degree, degree) = c;
    return k;
  }

  // Exact coefficients of (f(z) - f(w))/(z - w) for a circle polynomial f.
  static CirclePolyKernel divided_difference(const ScalarFn& f) {
    const auto t = trig_coefficients(f);
    const int n = std::max(t.degree, 0);
    CirclePolyKernel k{n, GeneralMatrix::Zero(2 * n + 1, 2 * n + 1)};
    for (int p = 1; p <= t.degree; ++p) {
      // (z^p - w^p)/(z - w) = sum_{j<p} z^j w^{p-1-j}
      for (int j = 0; j < p; ++j) k.coeffs(j + n, p - 1 - j + n) += t.coeff(p);
      // (z^-p - w^-p)/(z - w) = -sum_{j<p} z^{j-p} w^{-1-j}
      for (int j = 0; j < p; ++j) k.coeffs(j - p + n, -1 - j + n) -= t.coeff(-p);
    }
    return k;
  }

  cplx operator()(cplx z, cplx w) const {
    cplx acc = 0.0;
    for (int j = -degree; j <= degree; ++j)
      for (int k = -degree; k <= degree; ++k)
        if (coeffs(j + degree, k + degree) != cplx{})
          acc += coeffs(j + degree, k + degree) * std::pow(z, j) * std::pow(w, k);
    return acc;
  }

  int support() const {
    int s = 0;
    for (int j = -degree; j <= degree; ++j)
      for (int k = -degree; k <= degree; ++k)
        if (std::abs(coeffs(j + degree, k + degree)) > 0.0) s = std::max({s, std::abs(j), std::abs(k)});
    return s;
  }
};

inline GeneralMatrix sample_circle_kernel(const CirclePolyKernel& k, const Grid& rows, const Grid& cols) {
  const auto& z = rows.circle_points();
  const auto& w = cols.circle_points();
  GeneralMatrix m(static_cast<Eigen::Index>(z.size()), static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = k(z[i], w[j]);
  return m;
}

// Continuum bracket [grid lower, 2 grid upper] from the finite grid tau1 T_{4n} x tau2 T_{4n}.
inline TransferBracket transfer_circle(const CirclePolyKernel& k, int n, cplx tau1 = 1.0, cplx tau2 = 1.0,
                                       const MultNormOptions& opts = {}) {
  if (n < 1) throw PreconditionError("transfer_circle: n must be >= 1");
  if (k.support() > n) throw PreconditionError("transfer_circle: kernel degree exceeds n");
  const MultiplierProblem p{sample_circle_kernel(k, sampling_circle(n, tau1), sampling_circle(n, tau2)), "circle grid",
                            std::nullopt};
  TransferBracket b;
  b.cert = mult_norm(p, opts);
  b.grid_lower = b.cert.lower.value;
  b.grid_upper = b.cert.upper.value;
  b.lower = b.grid_lower;
  b.upper = 2.0 * b.grid_upper;
  b.caveat = "finite grid; both ends certified";
  return b;
}

// ---------------------------------------------------------------- Z windows

struct SharpnessBracket {
  double lower = 0.0;  // on the commutator modulus at delta, divided by delta
  double upper = 0.0;
  MultiplierCertificate cert;
  std::string label = "window lower bound of the operator Lipschitz norm on Z";
};

inline SharpnessBracket commutator_sharpness_z(const ScalarFn& f, long lo, long hi, double delta,
                                               const MultNormOptions& opts = {}) {
  if (!(delta > 0.0)) throw PreconditionError("commutator_sharpness_z: delta must be positive");
  if (delta > 2.0 / std::numbers::pi) throw PreconditionError("commutator_sharpness_z: delta > 2/pi is out of regime");
  const Grid g = Grid::integers(lo, hi);
  SharpnessBracket b;
  b.cert = mult_norm(difference_quotient_problem(f, g, g), opts);
  b.lower = b.cert.lower.value / 2.0;
  b.upper = b.cert.upper.value;
  return b;
}

inline ScalarFn parity_fn() {
  return ScalarFn::custom("parity", [](double x) { return std::cos(std::numbers::pi * x); },
                          [](double x) { return -std::numbers::pi * std::sin(std::numbers::pi * x); });
}

struct ProfilePoint {
  int n = 0;
  double partial_sum = 0.0;
  double profile = 0.0;  // 2^{-n} partial_sum
};

inline std::vector<ProfilePoint> besN_profile(const ScalarFn& f, int n_max) {
  const auto t = trig_coefficients(f);
  std::vector<ProfilePoint> out;
  double partial = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    out.push_back({n, partial, std::ldexp(partial, -n)});
    if (n < 31) {
      const int p = 1 << n;
      partial += std::ldexp(std::abs(t.coeff(p)) + std::abs(t.coeff(-p)), n);
    }
  }
  return out;
}

struct LacunaryTrial {
  std::uint64_t seed = 0;
  std::vector<int> signs;
  std::vector<double> weights;
  double lip = 0.0;
  double value = 0.0;  // ||Delta0 h||_mult on T_{4 * 2^m}, h normalized to Lipschitz 1
};

struct LacunarySearch {
  int level = 0;
  LacunaryTrial best;
  std::vector<LacunaryTrial> trials;
};

inline LacunarySearch lacunary_search(int level, int trials, std::uint64_t seed, int jobs = 1,
                                      const MultNormOptions& opts = {}) {
  if (level < 0 || level > 6) throw PreconditionError("lacunary_search: level must lie in [0, 6]");
  if (trials < 1) throw PreconditionError("lacunary_search: trials must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < trials; ++i) seeds.push_back(seed + static_cast<std::uint64_t>(i));
  const int n = 1 << level;
  const Grid circle = Grid::roots_of_unity(static_cast<std::size_t>(4 * n));
  auto run = [&](std::uint64_t s) {
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> unif(0.5, 1.0);
    LacunaryTrial t;
    t.seed = s;
    for (int j = 0; j <= level; ++j) {
      t.signs.push_back((rng() & 1u) ? 1 : -1);
      t.weights.push_back(unif(rng) * std::ldexp(1.0, -j));
    }
    const ScalarFn h = ScalarFn::lacunary(t.signs, t.weights);
    t.lip = lip_const(h, 0.0, 0.0).value;
    const auto cert = mult_norm(difference_quotient_problem(h, circle, circle), opts);
    t.value = cert.upper.value / t.lip;
    return t;
  };
  LacunarySearch out;
  out.level = level;
  out.trials = parallel_map(seeds, run, jobs);
  out.best = out.trials.front();
  for (const auto& t : out.trials)
    if (t.value > out.best.value || (t.value == out.best.value && t.seed < out.best.seed)) out.best = t;
  return out;
}

}  // namespace oplab
