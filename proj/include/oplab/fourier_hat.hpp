#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oplab/errors.hpp"
#include "oplab/scalar_fn.hpp"

namespace oplab {

inline const double kFourthRoot12 = std::pow(12.0, 0.25);

// Sine integral Si(x) = int_0^x sin(t)/t dt.
inline double sine_integral(double x) {
  const double ax = std::abs(x);
  double si = 0.0;
  if (ax < 1e-300) return 0.0;
  if (ax <= 2.0) {
    double term = ax;  // x^{2k+1} / (2k+1)!
    double sum = 0.0;
    for (int k = 0; k < 40; ++k) {
      const double add = term / (2.0 * k + 1.0);
      sum += (k % 2 == 0) ? add : -add;
      if (add < 1e-18 * std::abs(sum)) break;
      term *= ax * ax / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    }
    si = sum;
  } else {
    // Continued fraction for E1(i x) (modified Lentz).
    std::complex<double> b(1.0, ax);
    std::complex<double> c = 1.0 / 1e-300;
    std::complex<double> d = 1.0 / b;
    std::complex<double> h = d;
    for (int i = 2; i < 1000; ++i) {
      const double a = -static_cast<double>((i - 1) * (i - 1));
      b += 2.0;
      d = 1.0 / (a * d + b);
      c = b + a / c;
      const std::complex<double> del = c * d;
      h *= del;
      if (std::abs(del - 1.0) < 1e-16) break;
    }
    h *= std::complex<double>(std::cos(ax), -std::sin(ax));
    si = std::numbers::pi / 2.0 + h.imag();
  }
  return x < 0.0 ? -si : si;
}

// psi'(x) for x > 0.
inline double trigamma(double x) {
  if (!(x > 0.0)) throw PreconditionError("trigamma: x must be positive");
  double acc = 0.0;
  while (x < 30.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double x2 = 1.0 / (x * x);
  return acc + 1.0 / x + x2 / 2.0 + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)));
}

namespace detail {

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
inline const std::array<double, 8> kGLx = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                                           0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                                           0.9445750230732326, 0.9894009349916499};
inline const std::array<double, 8> kGLw = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                                           0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                                           0.0622535239386479, 0.0271524594117541};

template <class F>
auto gauss_legendre(F&& f, double a, double b, int panels) {
  using R = decltype(f(a));
  R sum{};
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    const double half = 0.5 * h;
    for (std::size_t k = 0; k < kGLx.size(); ++k)
      sum += kGLw[k] * half * (f(mid - half * kGLx[k]) + f(mid + half * kGLx[k]));
  }
  return sum;
}

// int_0^1 u^k e^{i theta u} du, k in {0, 1}.
inline cplx exp_moment(int k, double theta) {
  if (std::abs(theta) < 1.0) {
    cplx sum = 0.0;
    cplx pw = 1.0;  // (i theta)^j / j!
    for (int j = 0; j < 30; ++j) {
      sum += pw / static_cast<double>(j + k + 1);
      pw *= cplx(0.0, theta) / static_cast<double>(j + 1);
    }
    return sum;
  }
  const cplx e = std::exp(cplx(0.0, theta));
  const cplx it(0.0, theta);
  if (k == 0) return (e - 1.0) / it;
  return e / it + (e - 1.0) / (theta * theta);
}

// Adaptive Simpson.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double eps, int depth, double fa, double fm, double fb, double whole) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, eps / 2.0, depth - 1, fa, flm, fm, left) +
         adaptive_simpson(f, m, b, eps / 2.0, depth - 1, fm, frm, fb, right);
}

template <class F>
double integrate_adaptive(F&& f, double a, double b, double eps, int depth = 40) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, eps, depth, fa, fm, fb, whole);
}

// G(u) = (sin u - u cos u)/u^2 + pi/2 - Si(u), u >= 0.
inline double fa_profile(double u) {
  u = std::abs(u);
  const double head = u < 1e-3 ? u / 3.0 - u * u * u / 30.0 : (std::sin(u) - u * std::cos(u)) / (u * u);
  return head + std::numbers::pi / 2.0 - sine_integral(u);
}

}  // namespace detail

// g(t) = (1/2pi) int f(x) e^{ixt} dx for the kinds that admit a closed form or are integrable.
inline cplx inverse_fourier(const ScalarFn& f, double t) {
  if (f.is<fn::Gaussian>()) return std::exp(-t * t / 4.0) / (2.0 * std::sqrt(std::numbers::pi));
  if (f.is<fn::FaKernel>()) {
    // f_a odd: g(t) = (i/pi) int_0^inf f_a(x) sin(xt) dx = (i/pi) sign(t) G(a|t|).
    const double a = f.as<fn::FaKernel>().a;
    const double g = detail::fa_profile(a * t) / std::numbers::pi;
    return cplx(0.0, t >= 0.0 ? g : -g);
  }
  if (f.is<fn::PiecewiseLinear>()) {
    const auto& k = f.as<fn::PiecewiseLinear>();
    if (k.left_slope != 0.0 || k.right_slope != 0.0 || k.knots.front().second != 0.0 || k.knots.back().second != 0.0)
      throw PreconditionError("inverse_fourier: piecewise linear extension must vanish outside its knots");
    cplx sum = 0.0;
    for (std::size_t i = 1; i < k.knots.size(); ++i) {
      const auto [x0, y0] = k.knots[i - 1];
      const auto [x1, y1] = k.knots[i];
      const double h = x1 - x0;
      const double theta = t * h;
      sum += std::exp(cplx(0.0, x0 * t)) * h * (y0 * detail::exp_moment(0, theta) + (y1 - y0) * detail::exp_moment(1, theta));
    }
    return sum / (2.0 * std::numbers::pi);
  }
  throw UnsupportedError("inverse_fourier: no integrable closed form for " + f.name());
}

// Characteristic length of the extension, used for the window precondition.
inline double characteristic_scale(const ScalarFn& f) {
  if (f.is<fn::FaKernel>()) return f.as<fn::FaKernel>().a;
  if (f.is<fn::PiecewiseLinear>()) {
    const auto& k = f.as<fn::PiecewiseLinear>().knots;
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < k.size(); ++i) h = std::min(h, k[i].first - k[i - 1].first);
    return h;
  }
  return 1.0;
}

struct QuadratureResult {
  double value = 0.0;
  double discretization_error = 0.0;
  double truncation_error = 0.0;
  double error_bound() const { return discretization_error + truncation_error; }
};

// int |F^{-1} f| over R: Simpson on [-T, T] (by symmetry of |g| for real f) plus a tail from the
// observed t^{-2} envelope of |g| on [T/2, T].
inline QuadratureResult hat_norm_quadrature(const ScalarFn& f, double window, double grid_step) {
  if (!(window > 0.0) || !(grid_step > 0.0) || grid_step >= window)
    throw PreconditionError("hat_norm_quadrature: need 0 < grid_step < window");
  const double scale = characteristic_scale(f);
  if (window * scale < 10.0)
    throw PreconditionError("hat_norm_quadrature: window must be at least 10 / characteristic scale");
  auto k = static_cast<long>(std::ceil(window / grid_step));
  if (k % 4 != 0) k += 4 - k % 4;
  const double h = window / static_cast<double>(k);
  std::vector<double> g(static_cast<std::size_t>(k + 1));
  for (long i = 0; i <= k; ++i) g[static_cast<std::size_t>(i)] = std::abs(inverse_fourier(f, h * static_cast<double>(i)));

  auto simpson = [&](long stride, long from, long to) {
    const double hh = h * static_cast<double>(stride);
    double s = g[static_cast<std::size_t>(from)] + g[static_cast<std::size_t>(to)];
    for (long i = from + stride, j = 1; i < to; i += stride, ++j) s += (j % 2 ? 4.0 : 2.0) * g[static_cast<std::size_t>(i)];
    return s * hh / 3.0;
  };
  const double fine = simpson(1, 0, k);
  const double coarse = simpson(2, 0, k);

  double cmax = 0.0;
  double cmean = 0.0;
  long count = 0;
  for (long i = k / 2; i <= k; ++i) {
    const double t = h * static_cast<double>(i);
    const double c = t * t * g[static_cast<std::size_t>(i)];
    cmax = std::max(cmax, c);
    cmean += c;
    ++count;
  }
  cmean /= static_cast<double>(count);
  QuadratureResult r;
  r.value = 2.0 * (fine + cmean / window);
  r.discretization_error = 2.0 * std::abs(fine - coarse);
  r.truncation_error = 2.0 * cmax / window;
  if (r.truncation_error > 0.1 * r.value)
    throw PreconditionError("hat_norm_quadrature: insufficient decay (tail estimate exceeds 10% of the value)");
  return r;
}

struct Ray {
  enum class Side { LeftInfinite, RightInfinite };  // (-inf, endpoint] or [endpoint, inf)
  Side side;
  double endpoint;
};

// max_J |f| for f monotone, convex or concave and vanishing at infinity on the ray J.
inline double polya_bound(const ScalarFn& f, const Ray& ray) {
  const double sign = ray.side == Ray::Side::RightInfinite ? 1.0 : -1.0;
  std::vector<double> x;
  x.push_back(ray.endpoint);
  for (int k = -10; k <= 60; ++k) x.push_back(ray.endpoint + sign * std::pow(10.0, k / 10.0));
  std::sort(x.begin(), x.end());
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = eval(f, x[i]);
  auto triple = [&](std::size_t i) {
    return "(" + fmt_num(x[i - 1]) + ", " + fmt_num(x[i]) + ", " + fmt_num(x[i + 1]) + ")";
  };
  double max_abs = 0.0;
  for (double v : y) max_abs = std::max(max_abs, std::abs(v));
  const double tiny = 1e-12 * std::max(1.0, max_abs);
  int mono = 0;
  int curv = 0;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const double s0 = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
    const double s1 = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    for (double s : {s0, s1}) {
      const int d = s > tiny ? 1 : (s < -tiny ? -1 : 0);
      if (d != 0 && mono != 0 && d != mono)
        throw PreconditionError("polya_bound: " + f.name() + " is not monotone on the ray near " + triple(i));
      if (d != 0) mono = d;
    }
    const double c = s1 - s0;
    const int dc = c > tiny ? 1 : (c < -tiny ? -1 : 0);
    if (dc != 0 && curv != 0 && dc != curv)
      throw PreconditionError("polya_bound: " + f.name() + " is neither convex nor concave near " + triple(i));
    if (dc != 0) curv = dc;
  }
  const double far = ray.side == Ray::Side::RightInfinite ? y.back() : y.front();
  if (!std::isfinite(max_abs) || std::abs(far) > 1e-3 * max_abs)
    throw PreconditionError("polya_bound: " + f.name() + " does not vanish at infinity on the probe");
  return std::abs(eval(f, ray.endpoint));
}

// (eˣ-1)/(eˣ+1) on a bounded interval J containing 0.
inline double tanh_half_interval_bound(double lo, double hi) {
  if (!(lo <= 0.0 && hi >= 0.0)) throw PreconditionError("tanh_half_interval_bound: 0 must lie in J");
  const double len = hi - lo;
  double b = len / kFourthRoot12;
  if (len >= 4.0) b = std::min(b, 5.0 + (4.0 / std::numbers::pi) * std::log(len / 2.0));
  return b;
}

// Bound for e^x / (1 + e^x) type functions on (-inf, a], a >= 2.
inline double exp_ray_bound(double a) {
  if (!(a >= 2.0)) throw UnsupportedError("exp_ray_bound: a must be >= 2");
  return 2.0 + (2.0 / std::numbers::pi) * std::log(a);
}

inline double lip_extension_bound(const ScalarFn& f, double lo, double hi) {
  if (!(lo <= 0.0 && hi >= 0.0)) throw PreconditionError("lip_extension_bound: 0 must lie in J");
  if (std::abs(eval(f, 0.0)) > 1e-15) throw PreconditionError("lip_extension_bound: f(0) != 0");
  const auto lip = lip_const(f, lo, hi);
  if (!lip.exact) throw PreconditionError("lip_extension_bound: no exact Lipschitz constant for " + f.name());
  return (2.0 / kFourthRoot12) * (hi - lo) * lip.value;
}

// xi(t) = t / (2 sin(t/2)) and its derivative.
inline double xi(double t) {
  if (std::abs(t) < 1e-4) return 1.0 + t * t / 24.0;
  return t / (2.0 * std::sin(t / 2.0));
}

inline double xi_prime(double t) {
  if (std::abs(t) < 1e-4) return t / 12.0;
  const double s = std::sin(t / 2.0);
  return (2.0 * s - t * std::cos(t / 2.0)) / (4.0 * s * s);
}

struct Periodization {
  std::vector<double> coefficients;  // a_{-N}..a_N
  double partial_sum_abs = 0.0;      // sum_{|n| <= N} |a_n|
  double tail_estimate = 0.0;        // asymptotic sum_{|n| > N} |a_n|
  double sum_abs = 0.0;              // partial + tail
  int N = 0;
  double coeff(int n) const { return coefficients[static_cast<std::size_t>(n + N)]; }
};

// Fourier coefficients of the 3pi-periodic even extension of xi from [-3pi/2, 3pi/2]:
// xi(t) = sum a_n e^{2int/3}. a_n = (2/3pi) int_0^{3pi/2} xi(t) cos(2nt/3) dt.
// Two integrations by parts give a_n ~ (3 xi'(3pi/2) / (2 pi)) (-1)^n / n^2, which sums the tail.
inline Periodization periodization_coefficients(int N) {
  if (N < 1) throw PreconditionError("periodization_coefficients: N must be >= 1");
  const double L = 1.5 * std::numbers::pi;
  Periodization p;
  p.N = N;
  p.coefficients.resize(static_cast<std::size_t>(2 * N + 1));
  for (int n = 0; n <= N; ++n) {
    const double w = 2.0 * n / 3.0;
    const int panels = 64 + 2 * n;
    const double a = (2.0 / (3.0 * std::numbers::pi)) *
                     detail::gauss_legendre([&](double t) { return xi(t) * std::cos(w * t); }, 0.0, L, panels);
    p.coefficients[static_cast<std::size_t>(N + n)] = a;
    p.coefficients[static_cast<std::size_t>(N - n)] = a;
  }
  for (double a : p.coefficients) p.partial_sum_abs += std::abs(a);
  p.tail_estimate = (3.0 * xi_prime(L) / std::numbers::pi) * trigamma(N + 1.0);
  p.sum_abs = p.partial_sum_abs + p.tail_estimate;
  return p;
}

inline double periodization_target() { return 3.0 * std::sqrt(2.0) * std::numbers::pi / 4.0; }

struct HatNormEstimate {
  std::string target;
  double j_lo = 0.0;
  double j_hi = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string method;
  double error_bound = 0.0;
};

inline nlohmann::json to_json(const HatNormEstimate& e) {
  return {{"target", e.target},
          {"J", {e.j_lo, e.j_hi}},
          {"lower", e.lower},
          {"upper", {{"value", e.upper}, {"method", e.method}}},
          {"error_bound", e.error_bound}};
}

// lower = sup_J |f| on a probe; upper = best applicable construction.
inline HatNormEstimate estimate_hat_norm(const ScalarFn& f, double lo, double hi) {
  if (!(hi >= lo)) throw PreconditionError("estimate_hat_norm: empty interval");
  HatNormEstimate e{f.name(), lo, hi, 0.0, std::numeric_limits<double>::infinity(), "", 0.0};
  for (int i = 0; i <= 4000; ++i) e.lower = std::max(e.lower, std::abs(eval(f, lo + (hi - lo) * i / 4000.0)));
  auto offer = [&](double v, const std::string& method, double err) {
    if (v + err < e.upper + e.error_bound) {
      e.upper = v;
      e.method = method;
      e.error_bound = err;
    }
  };
  const bool zero_inside = lo <= 0.0 && hi >= 0.0;
  if (zero_inside && std::abs(eval(f, 0.0)) <= 1e-15 && lip_const(f, lo, hi).exact)
    offer(lip_extension_bound(f, lo, hi), "lip-extension", 0.0);
  if (f.is<fn::TanhHalf>() && zero_inside) {
    const double len = hi - lo;
    offer(len / kFourthRoot12, "lip-extension", 0.0);
    if (len >= 4.0) offer(5.0 + (4.0 / std::numbers::pi) * std::log(len / 2.0), "logaa", 0.0);
  }
  if (f.is<fn::FaKernel>() || f.is<fn::Gaussian>() ||
      (f.is<fn::PiecewiseLinear>() && f.sup_norm().has_value() && f.as<fn::PiecewiseLinear>().knots.front().second == 0.0 &&
       f.as<fn::PiecewiseLinear>().knots.back().second == 0.0)) {
    const double s = characteristic_scale(f);
    const auto q = hat_norm_quadrature(f, 4000.0 / s, 0.05 / s);
    offer(q.value, "quadrature", q.error_bound());
  }
  if (!std::isfinite(e.upper)) throw UnsupportedError("estimate_hat_norm: no upper construction for " + f.name());
  return e;
}

}  // namespace oplab
