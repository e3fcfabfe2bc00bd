#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "oplab/errors.hpp"
#include "oplab/spectral.hpp"

namespace oplab {

enum class Carrier { RealLine, Circle };

namespace fn {
struct Abs {};
struct Kappa {};
struct PhiS {
  double s;
};
struct TanhHalf {};  // (e^x - 1)/(e^x + 1) = tanh(x/2)
struct FaKernel {
  double a;
};
struct PiecewiseLinear {
  std::vector<std::pair<double, double>> knots;
  double left_slope = 0.0;
  double right_slope = 0.0;
};
// sum_{k=-n}^{n} c_k z^k on the unit circle; coeffs[k + n] = c_k.
struct TrigPoly {
  int degree = 0;
  std::vector<cplx> coeffs;
  cplx coeff(int k) const {
    return (k < -degree || k > degree) ? cplx{} : coeffs[static_cast<std::size_t>(k + degree)];
  }
};
// sum_j signs[j] * weights[j] * z^{2^j}, j = 0..level.
struct LacunarySigned {
  int level = 0;
  std::vector<int> signs;
  std::vector<double> weights;
};
struct Gaussian {};
struct Exp {};
struct Logistic {};
struct Reciprocal {};
struct Custom {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};
}  // namespace fn

using FnKind = std::variant<fn::Abs, fn::Kappa, fn::PhiS, fn::TanhHalf, fn::FaKernel, fn::PiecewiseLinear, fn::TrigPoly,
                            fn::LacunarySigned, fn::Gaussian, fn::Exp, fn::Logistic, fn::Reciprocal, fn::Custom>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

class ScalarFn {
 public:
  explicit ScalarFn(FnKind kind) : kind_(std::move(kind)) { validate(); }

  static ScalarFn abs() { return ScalarFn(fn::Abs{}); }
  static ScalarFn kappa() { return ScalarFn(fn::Kappa{}); }
  static ScalarFn phi(double s) { return ScalarFn(fn::PhiS{s}); }
  static ScalarFn tanh_half() { return ScalarFn(fn::TanhHalf{}); }
  static ScalarFn fa(double a) { return ScalarFn(fn::FaKernel{a}); }
  static ScalarFn piecewise_linear(std::vector<std::pair<double, double>> knots, double left_slope = 0.0,
                                   double right_slope = 0.0) {
    return ScalarFn(fn::PiecewiseLinear{std::move(knots), left_slope, right_slope});
  }
  // alpha * t + beta
  static ScalarFn linear(double alpha, double beta = 0.0) {
    return piecewise_linear({{0.0, beta}}, alpha, alpha);
  }
  // (1 - |x|)_+
  static ScalarFn triangle() { return piecewise_linear({{-1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}}); }
  static ScalarFn trig(std::vector<cplx> coeffs) {
    if (coeffs.size() % 2 == 0) throw PreconditionError("trig: need 2n+1 coefficients c_{-n}..c_n");
    const int n = static_cast<int>(coeffs.size() / 2);
    return ScalarFn(fn::TrigPoly{n, std::move(coeffs)});
  }
  static ScalarFn monomial(int k, cplx c = 1.0) {
    const int n = std::abs(k);
    std::vector<cplx> coeffs(static_cast<std::size_t>(2 * n + 1));
    coeffs[static_cast<std::size_t>(k + n)] = c;
    return trig(std::move(coeffs));
  }
  static ScalarFn lacunary(std::vector<int> signs, std::vector<double> weights) {
    if (signs.empty() || signs.size() != weights.size())
      throw PreconditionError("lacunary: need matching, non-empty sign and weight lists");
    for (int s : signs)
      if (s != 1 && s != -1) throw PreconditionError("lacunary: signs must be +1 or -1");
    const int level = static_cast<int>(signs.size()) - 1;
    return ScalarFn(fn::LacunarySigned{level, std::move(signs), std::move(weights)});
  }
  static ScalarFn gaussian() { return ScalarFn(fn::Gaussian{}); }
  static ScalarFn exp() { return ScalarFn(fn::Exp{}); }
  static ScalarFn logistic() { return ScalarFn(fn::Logistic{}); }
  static ScalarFn reciprocal() { return ScalarFn(fn::Reciprocal{}); }
  static ScalarFn custom(std::string name, std::function<double(double)> value,
                         std::function<double(double)> derivative = {}) {
    return ScalarFn(fn::Custom{std::move(name), std::move(value), std::move(derivative)});
  }

  const FnKind& kind() const { return kind_; }

  template <class K>
  bool is() const {
    return std::holds_alternative<K>(kind_);
  }
  template <class K>
  const K& as() const {
    return std::get<K>(kind_);
  }

  Carrier carrier() const {
    return (is<fn::TrigPoly>() || is<fn::LacunarySigned>()) ? Carrier::Circle : Carrier::RealLine;
  }

  std::string name() const {
    return std::visit(overloaded{
                          [](const fn::Abs&) { return std::string("abs"); },
                          [](const fn::Kappa&) { return std::string("kappa"); },
                          [](const fn::PhiS& k) { return "phi:" + fmt_num(k.s); },
                          [](const fn::TanhHalf&) { return std::string("tanh-half"); },
                          [](const fn::FaKernel& k) { return "fa:" + fmt_num(k.a); },
                          [](const fn::PiecewiseLinear& k) { return "pl[" + std::to_string(k.knots.size()) + "]"; },
                          [](const fn::TrigPoly& k) { return "trig[" + std::to_string(k.degree) + "]"; },
                          [](const fn::LacunarySigned& k) { return "lacunary[" + std::to_string(k.level) + "]"; },
                          [](const fn::Gaussian&) { return std::string("gaussian"); },
                          [](const fn::Exp&) { return std::string("exp"); },
                          [](const fn::Logistic&) { return std::string("logistic"); },
                          [](const fn::Reciprocal&) { return std::string("reciprocal"); },
                          [](const fn::Custom& k) { return k.name; },
                      },
                      kind_);
  }

  // Exact global Lipschitz constant, when known.
  std::optional<double> lipschitz() const {
    return std::visit(overloaded{
                          [](const fn::Abs&) -> std::optional<double> { return 1.0; },
                          [](const fn::Kappa&) -> std::optional<double> { return 1.0; },
                          [](const fn::PhiS& k) -> std::optional<double> { return k.s == 0.0 ? 0.0 : 1.0; },
                          [](const fn::TanhHalf&) -> std::optional<double> { return 0.5; },
                          [](const fn::FaKernel& k) -> std::optional<double> { return 1.0 / (k.a * k.a); },
                          [](const fn::PiecewiseLinear& k) -> std::optional<double> {
                            double l = std::max(std::abs(k.left_slope), std::abs(k.right_slope));
                            for (std::size_t i = 1; i < k.knots.size(); ++i)
                              l = std::max(l, std::abs((k.knots[i].second - k.knots[i - 1].second) /
                                                       (k.knots[i].first - k.knots[i - 1].first)));
                            return l;
                          },
                          [](const fn::Gaussian&) -> std::optional<double> { return std::sqrt(2.0 / std::numbers::e); },
                          [](const fn::Logistic&) -> std::optional<double> { return 0.25; },
                          [](const auto&) -> std::optional<double> { return std::nullopt; },
                      },
                      kind_);
  }

  std::optional<double> sup_norm() const {
    return std::visit(overloaded{
                          [](const fn::Kappa&) -> std::optional<double> { return 1.0; },
                          [](const fn::PhiS& k) -> std::optional<double> { return std::abs(k.s); },
                          [](const fn::TanhHalf&) -> std::optional<double> { return 1.0; },
                          [](const fn::FaKernel& k) -> std::optional<double> { return 1.0 / k.a; },
                          [](const fn::PiecewiseLinear& k) -> std::optional<double> {
                            if (k.left_slope != 0.0 || k.right_slope != 0.0) return std::nullopt;
                            double m = 0.0;
                            for (const auto& [x, y] : k.knots) m = std::max(m, std::abs(y));
                            return m;
                          },
                          [](const fn::Gaussian&) -> std::optional<double> { return 1.0; },
                          [](const fn::Logistic&) -> std::optional<double> { return 1.0; },
                          [](const auto&) -> std::optional<double> { return std::nullopt; },
                      },
                      kind_);
  }

 private:
  void validate() const {
    std::visit(overloaded{
                   [](const fn::PhiS& k) {
                     if (!std::isfinite(k.s)) throw PreconditionError("phi_s: s must be finite");
                   },
                   [](const fn::FaKernel& k) {
                     if (!(k.a > 0.0) || !std::isfinite(k.a)) throw PreconditionError("f_a: a must be positive");
                   },
                   [](const fn::PiecewiseLinear& k) {
                     if (k.knots.empty()) throw PreconditionError("piecewise linear: need at least one knot");
                     for (std::size_t i = 1; i < k.knots.size(); ++i)
                       if (!(k.knots[i].first > k.knots[i - 1].first))
                         throw PreconditionError("piecewise linear: knots must be strictly ascending");
                   },
                   [](const fn::TrigPoly& k) {
                     if (k.degree < 0 || k.coeffs.size() != static_cast<std::size_t>(2 * k.degree + 1))
                       throw PreconditionError("trig polynomial: need 2n+1 coefficients");
                   },
                   [](const fn::LacunarySigned& k) {
                     if (k.level < 0 || k.signs.size() != static_cast<std::size_t>(k.level + 1) ||
                         k.weights.size() != k.signs.size())
                       throw PreconditionError("lacunary: signs and weights must have level+1 entries");
                     for (int s : k.signs)
                       if (s != 1 && s != -1) throw PreconditionError("lacunary: signs must be +-1");
                   },
                   [](const fn::Custom& k) {
                     if (!k.value) throw PreconditionError("custom function: missing evaluator");
                   },
                   [](const auto&) {},
               },
               kind_);
  }

  FnKind kind_;
};

inline fn::TrigPoly as_trig(const fn::LacunarySigned& l) {
  const int n = 1 << l.level;
  fn::TrigPoly t{n, std::vector<cplx>(static_cast<std::size_t>(2 * n + 1))};
  for (int j = 0; j <= l.level; ++j)
    t.coeffs[static_cast<std::size_t>((1 << j) + n)] += static_cast<double>(l.signs[static_cast<std::size_t>(j)]) *
                                                        l.weights[static_cast<std::size_t>(j)];
  return t;
}

inline fn::TrigPoly trig_coefficients(const ScalarFn& f) {
  if (f.is<fn::TrigPoly>()) return f.as<fn::TrigPoly>();
  if (f.is<fn::LacunarySigned>()) return as_trig(f.as<fn::LacunarySigned>());
  throw UnsupportedError("trig_coefficients: " + f.name() + " is not a circle polynomial");
}

namespace detail {

inline double pl_eval(const fn::PiecewiseLinear& k, double t) {
  const auto& kn = k.knots;
  if (t <= kn.front().first) return kn.front().second + k.left_slope * (t - kn.front().first);
  if (t >= kn.back().first) return kn.back().second + k.right_slope * (t - kn.back().first);
  auto it = std::upper_bound(kn.begin(), kn.end(), t, [](double v, const auto& p) { return v < p.first; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (t - lo.first) / (hi.first - lo.first);
  return lo.second + w * (hi.second - lo.second);
}

// Slope of segment i, where segment 0 is the left ray and segment knots.size() the right ray.
inline double pl_slope(const fn::PiecewiseLinear& k, std::size_t seg) {
  if (seg == 0) return k.left_slope;
  if (seg == k.knots.size()) return k.right_slope;
  return (k.knots[seg].second - k.knots[seg - 1].second) / (k.knots[seg].first - k.knots[seg - 1].first);
}

inline void require_circle_point(cplx z) {
  if (std::abs(std::abs(z) - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "point " << z << " is not on the unit circle";
    throw DomainError(msg.str());
  }
}

inline std::string kink_message(const ScalarFn& f, double t) {
  std::ostringstream msg;
  msg.precision(17);
  msg << f.name() << " is not differentiable at t = " << t;
  return msg.str();
}

}  // namespace detail

// Real-line evaluation.
inline double eval(const ScalarFn& f, double t) {
  return std::visit(overloaded{
                        [&](const fn::Abs&) { return std::abs(t); },
                        [&](const fn::Kappa&) { return 0.5 * (std::abs(1.0 + t) - std::abs(1.0 - t)); },
                        [&](const fn::PhiS& k) {
                          return k.s >= 0.0 ? std::clamp(t, 0.0, k.s) : std::clamp(-t, 0.0, -k.s);
                        },
                        [&](const fn::TanhHalf&) { return std::tanh(0.5 * t); },
                        [&](const fn::FaKernel& k) { return std::abs(t) <= k.a ? t / (k.a * k.a) : 1.0 / t; },
                        [&](const fn::PiecewiseLinear& k) { return detail::pl_eval(k, t); },
                        [&](const fn::Gaussian&) { return std::exp(-t * t); },
                        [&](const fn::Exp&) { return std::exp(t); },
                        [&](const fn::Logistic&) { return 1.0 / (1.0 + std::exp(-t)); },
                        [&](const fn::Reciprocal&) {
                          if (t == 0.0) throw DomainError("reciprocal: pole at t = 0");
                          return 1.0 / t;
                        },
                        [&](const fn::Custom& k) { return k.value(t); },
                        [&](const auto&) -> double {
                          throw DomainError("eval: real point passed to circle function " + f.name());
                        },
                    },
                    f.kind());
}

// Circle evaluation.
inline cplx eval(const ScalarFn& f, cplx z) {
  if (f.carrier() != Carrier::Circle)
    throw DomainError("eval: circle point passed to real-line function " + f.name());
  detail::require_circle_point(z);
  const fn::TrigPoly t = trig_coefficients(f);
  cplx acc = 0.0;
  const cplx zi = 1.0 / z;
  cplx zp = 1.0;
  cplx zm = 1.0;
  acc += t.coeff(0);
  for (int k = 1; k <= t.degree; ++k) {
    zp *= z;
    zm *= zi;
    acc += t.coeff(k) * zp + t.coeff(-k) * zm;
  }
  return acc;
}

inline double derivative(const ScalarFn& f, double t) {
  return std::visit(overloaded{
                        [&](const fn::Abs&) {
                          if (t == 0.0) throw DomainError(detail::kink_message(f, t));
                          return t > 0.0 ? 1.0 : -1.0;
                        },
                        [&](const fn::Kappa&) {
                          if (t == 1.0 || t == -1.0) throw DomainError(detail::kink_message(f, t));
                          return std::abs(t) < 1.0 ? 1.0 : 0.0;
                        },
                        [&](const fn::PhiS& k) {
                          if (t == 0.0 || t == k.s) throw DomainError(detail::kink_message(f, t));
                          // slope sign(s) strictly between 0 and s
                          return t * (t - k.s) < 0.0 ? (k.s > 0.0 ? 1.0 : -1.0) : 0.0;
                        },
                        [&](const fn::TanhHalf&) {
                          const double th = std::tanh(0.5 * t);
                          return 0.5 * (1.0 - th * th);
                        },
                        [&](const fn::FaKernel& k) {
                          if (std::abs(t) == k.a) throw DomainError(detail::kink_message(f, t));
                          return std::abs(t) < k.a ? 1.0 / (k.a * k.a) : -1.0 / (t * t);
                        },
                        [&](const fn::PiecewiseLinear& k) {
                          const auto& kn = k.knots;
                          auto hit = std::find_if(kn.begin(), kn.end(), [&](const auto& p) { return p.first == t; });
                          if (hit != kn.end()) {
                            const auto idx = static_cast<std::size_t>(hit - kn.begin());
                            if (detail::pl_slope(k, idx) != detail::pl_slope(k, idx + 1))
                              throw DomainError(detail::kink_message(f, t));
                            return detail::pl_slope(k, idx);
                          }
                          auto it = std::upper_bound(kn.begin(), kn.end(), t,
                                                     [](double v, const auto& p) { return v < p.first; });
                          return detail::pl_slope(k, static_cast<std::size_t>(it - kn.begin()));
                        },
                        [&](const fn::Gaussian&) { return -2.0 * t * std::exp(-t * t); },
                        [&](const fn::Exp&) { return std::exp(t); },
                        [&](const fn::Logistic&) {
                          const double s = 1.0 / (1.0 + std::exp(-t));
                          return s * (1.0 - s);
                        },
                        [&](const fn::Reciprocal&) {
                          if (t == 0.0) throw DomainError("reciprocal: pole at t = 0");
                          return -1.0 / (t * t);
                        },
                        [&](const fn::Custom& k) {
                          if (!k.derivative) throw UnsupportedError("derivative: custom function without derivative");
                          return k.derivative(t);
                        },
                        [&](const auto&) -> double {
                          throw DomainError("derivative: real point passed to circle function " + f.name());
                        },
                    },
                    f.kind());
}

// Complex derivative d/dz on the circle.
inline cplx derivative(const ScalarFn& f, cplx z) {
  if (f.carrier() != Carrier::Circle)
    throw DomainError("derivative: circle point passed to real-line function " + f.name());
  detail::require_circle_point(z);
  const fn::TrigPoly t = trig_coefficients(f);
  cplx acc = 0.0;
  for (int k = -t.degree; k <= t.degree; ++k)
    if (k != 0) acc += static_cast<double>(k) * t.coeff(k) * std::pow(z, k - 1);
  return acc;
}

inline HermitianMatrix apply_fn(const ScalarFn& f, const HermitianMatrix& A, const SpectralDecomposition& d) {
  if (f.carrier() != Carrier::RealLine) throw DomainError("apply_fn: " + f.name() + " lives on the circle");
  // Affine f is applied directly, so constants give exact multiples of the identity.
  if (const auto* pl = std::get_if<fn::PiecewiseLinear>(&f.kind());
      pl && pl->knots.size() == 1 && pl->left_slope == pl->right_slope) {
    const auto [x0, y0] = pl->knots.front();
    const double a = pl->left_slope;
    const GeneralMatrix id = GeneralMatrix::Identity(A.dim(), A.dim());
    return HermitianMatrix(a == 0.0 ? GeneralMatrix(y0 * id) : GeneralMatrix(a * A.matrix() + (y0 - a * x0) * id));
  }
  return apply_spectral(d, [&](double x) {
    try {
      return eval(f, x);
    } catch (const DomainError& e) {
      throw DomainError(std::string("apply_fn: eigenvalue ") + fmt_num(x) + " outside the domain: " + e.what());
    }
  });
}

inline HermitianMatrix apply_fn(const ScalarFn& f, const HermitianMatrix& A) {
  return apply_fn(f, A, eig_hermitian(A));
}

// ---------------------------------------------------------------- grids

class Grid {
 public:
  static constexpr double kMinRelSpacing = 1e-9;

  static Grid line(std::vector<double> pts) {
    if (pts.empty()) throw PreconditionError("Grid: at least one point required");
    for (double x : pts)
      if (!std::isfinite(x)) throw PreconditionError("Grid: non-finite point");
    std::sort(pts.begin(), pts.end());
    double scale = 1.0;
    for (double x : pts) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (pts[i] - pts[i - 1] < kMinRelSpacing * scale) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "Grid: points " << pts[i - 1] << " and " << pts[i] << " are not distinct at relative spacing 1e-9";
        throw PreconditionError(msg.str());
      }
    Grid g;
    g.carrier_ = Carrier::RealLine;
    g.re_ = std::move(pts);
    return g;
  }

  static Grid uniform(double lo, double hi, std::size_t count) {
    if (count == 0) throw PreconditionError("Grid::uniform: count must be positive");
    if (count == 1) return line({lo});
    std::vector<double> p(count);
    for (std::size_t i = 0; i < count; ++i)
      p[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return line(std::move(p));
  }

  static Grid uniform_step(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) throw PreconditionError("Grid::uniform_step: bad window or step");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> p(count);
    for (std::size_t i = 0; i < count; ++i) p[i] = lo + step * static_cast<double>(i);
    return line(std::move(p));
  }

  static Grid integers(long lo, long hi) {
    if (hi < lo) throw PreconditionError("Grid::integers: empty range");
    std::vector<double> p;
    for (long k = lo; k <= hi; ++k) p.push_back(static_cast<double>(k));
    return line(std::move(p));
  }

  // first * ratio^k, k = 0..count-1
  static Grid geometric(double first, double ratio, std::size_t count) {
    if (count == 0 || first == 0.0 || !(ratio > 0.0)) throw PreconditionError("Grid::geometric: bad parameters");
    std::vector<double> p(count);
    for (std::size_t k = 0; k < count; ++k) p[k] = first * std::pow(ratio, static_cast<double>(k));
    return line(std::move(p));
  }

  // tau * T_n
  static Grid roots_of_unity(std::size_t n, cplx tau = 1.0) {
    if (n == 0) throw PreconditionError("Grid::roots_of_unity: n must be positive");
    std::vector<cplx> z(n);
    for (std::size_t k = 0; k < n; ++k)
      z[k] = tau * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    return circle(std::move(z));
  }

  static Grid circle(std::vector<cplx> pts) {
    if (pts.empty()) throw PreconditionError("Grid: at least one point required");
    for (auto z : pts) detail::require_circle_point(z);
    auto arg = [](cplx z) {
      double a = std::arg(z);
      return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
    };
    std::sort(pts.begin(), pts.end(), [&](cplx a, cplx b) { return arg(a) < arg(b); });
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        if (std::abs(pts[i] - pts[j]) < kMinRelSpacing) throw PreconditionError("Grid: circle points are not distinct");
    Grid g;
    g.carrier_ = Carrier::Circle;
    g.z_ = std::move(pts);
    return g;
  }

  Carrier carrier() const { return carrier_; }
  std::size_t size() const { return carrier_ == Carrier::RealLine ? re_.size() : z_.size(); }

  const std::vector<double>& reals() const {
    if (carrier_ != Carrier::RealLine) throw DomainError("Grid: circle grid has no real coordinates");
    return re_;
  }
  const std::vector<cplx>& circle_points() const {
    if (carrier_ != Carrier::Circle) throw DomainError("Grid: real-line grid has no circle points");
    return z_;
  }
  double front() const { return reals().front(); }
  double back() const { return reals().back(); }

 private:
  Carrier carrier_ = Carrier::RealLine;
  std::vector<double> re_;
  std::vector<cplx> z_;
};

inline nlohmann::json to_json(const Grid& g) {
  nlohmann::json j;
  if (g.carrier() == Carrier::RealLine) {
    j["carrier"] = "real-line";
    j["points"] = g.reals();
  } else {
    j["carrier"] = "circle";
    nlohmann::json pts = nlohmann::json::array();
    for (auto z : g.circle_points()) pts.push_back({z.real(), z.imag()});
    j["points"] = pts;
  }
  return j;
}

inline Grid grid_from_json(const nlohmann::json& j) {
  const auto carrier = j.at("carrier").get<std::string>();
  if (carrier == "real-line") return Grid::line(j.at("points").get<std::vector<double>>());
  if (carrier == "circle") {
    std::vector<cplx> z;
    for (const auto& p : j.at("points")) z.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return Grid::circle(std::move(z));
  }
  throw PreconditionError("grid_from_json: unknown carrier " + carrier);
}

// ---------------------------------------------------------------- divided differences

enum class DiagonalRule { Zero, Derivative };

struct DividedDiffMatrix {
  ScalarFn fn;
  Grid rows;
  Grid cols;
  DiagonalRule rule;
  GeneralMatrix entries;
};

// Delta_0 f / Delta f on raw point lists; repeated points are allowed here (eigenvalue use).
inline GeneralMatrix divided_diff_values(const ScalarFn& f, const std::vector<double>& xs, const std::vector<double>& ys,
                                         DiagonalRule rule) {
  GeneralMatrix d(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
  std::vector<double> fx(xs.size()), fy(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) fx[i] = eval(f, xs[i]);
  for (std::size_t j = 0; j < ys.size(); ++j) fy[j] = eval(f, ys[j]);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      if (xs[i] != ys[j])
        d(ii, jj) = (fx[i] - fy[j]) / (xs[i] - ys[j]);
      else
        d(ii, jj) = rule == DiagonalRule::Zero ? 0.0 : derivative(f, xs[i]);
    }
  return d;
}

inline GeneralMatrix divided_diff_values(const ScalarFn& f, const std::vector<cplx>& xs, const std::vector<cplx>& ys,
                                         DiagonalRule rule) {
  GeneralMatrix d(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
  std::vector<cplx> fx(xs.size()), fy(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) fx[i] = eval(f, xs[i]);
  for (std::size_t j = 0; j < ys.size(); ++j) fy[j] = eval(f, ys[j]);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      if (xs[i] != ys[j])
        d(ii, jj) = (fx[i] - fy[j]) / (xs[i] - ys[j]);
      else
        d(ii, jj) = rule == DiagonalRule::Zero ? cplx{} : derivative(f, xs[i]);
    }
  return d;
}

inline DividedDiffMatrix divided_diff(const ScalarFn& f, const Grid& X, const Grid& Y, DiagonalRule rule) {
  if (X.carrier() != Y.carrier()) throw PreconditionError("divided_diff: grids live on different carriers");
  if ((f.carrier() == Carrier::Circle) != (X.carrier() == Carrier::Circle))
    throw DomainError("divided_diff: grid carrier does not match the domain of " + f.name());
  GeneralMatrix e = X.carrier() == Carrier::RealLine ? divided_diff_values(f, X.reals(), Y.reals(), rule)
                                                     : divided_diff_values(f, X.circle_points(), Y.circle_points(), rule);
  return DividedDiffMatrix{f, X, Y, rule, std::move(e)};
}

// ---------------------------------------------------------------- moduli and Lipschitz constants

struct ModulusValue {
  double value;
  bool exact;
  double resolution;  // largest probe gap; 0 when exact
};

struct LipschitzValue {
  double value;
  bool exact;
};

inline double interval_overlap(double a, double b, double c, double d) {
  return std::max(0.0, std::min(b, d) - std::max(a, c));
}

inline ModulusValue scalar_modulus(const ScalarFn& f, double delta, const Grid& probe) {
  if (!(delta > 0.0)) throw PreconditionError("scalar_modulus: delta must be positive");
  if (probe.size() == 0) throw PreconditionError("scalar_modulus: empty probe");
  if (probe.carrier() == Carrier::RealLine && f.carrier() == Carrier::RealLine) {
    const auto& x = probe.reals();
    const double lo = x.front();
    const double hi = x.back();
    // Exact on the probe hull for the clamp-type kinds: |f(x)-f(y)| is the length of [x,y]
    // inside the slope-1 region.
    std::optional<std::pair<double, double>> ramp;
    if (f.is<fn::Abs>()) return {std::min(delta, std::max(0.0, hi - lo)), true, 0.0};
    if (f.is<fn::Kappa>()) ramp = {-1.0, 1.0};
    if (f.is<fn::PhiS>()) ramp = {std::min(0.0, f.as<fn::PhiS>().s), std::max(0.0, f.as<fn::PhiS>().s)};
    if (ramp) return {std::min(delta, interval_overlap(lo, hi, ramp->first, ramp->second)), true, 0.0};

    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = eval(f, x[i]);
    double best = 0.0;
    double gap = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i > 0) gap = std::max(gap, x[i] - x[i - 1]);
      for (std::size_t j = i + 1; j < x.size() && x[j] - x[i] <= delta; ++j) best = std::max(best, std::abs(v[j] - v[i]));
    }
    return {best, false, gap};
  }
  if (probe.carrier() == Carrier::Circle && f.carrier() == Carrier::Circle) {
    const auto& z = probe.circle_points();
    std::vector<cplx> v(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) v[i] = eval(f, z[i]);
    double best = 0.0;
    double gap = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      gap = std::max(gap, std::abs(z[(i + 1) % z.size()] - z[i]));
      for (std::size_t j = 0; j < z.size(); ++j)
        if (std::abs(z[i] - z[j]) <= delta) best = std::max(best, std::abs(v[i] - v[j]));
    }
    return {best, false, gap};
  }
  throw DomainError("scalar_modulus: probe carrier does not match the domain of " + f.name());
}

inline constexpr std::size_t kLipProbePoints = 20001;

inline LipschitzValue lip_const(const ScalarFn& f, double lo, double hi) {
  if (!(hi >= lo)) throw PreconditionError("lip_const: empty window");
  const double width = hi - lo;
  auto ramp = [&](double a, double b) { return interval_overlap(lo, hi, a, b) > 0.0 || (width == 0.0 && lo > a && lo < b); };
  auto probe_lower = [&](auto&& g) -> LipschitzValue {
    double best = 0.0;
    const std::size_t n = kLipProbePoints;
    double prev = g(lo);
    for (std::size_t i = 1; i < n; ++i) {
      const double t = lo + width * static_cast<double>(i) / static_cast<double>(n - 1);
      const double cur = g(t);
      best = std::max(best, std::abs(cur - prev) / (width / static_cast<double>(n - 1)));
      prev = cur;
    }
    return {best, false};
  };
  return std::visit(
      overloaded{
          [&](const fn::Abs&) -> LipschitzValue { return {1.0, true}; },
          [&](const fn::Kappa&) -> LipschitzValue { return {ramp(-1.0, 1.0) ? 1.0 : 0.0, true}; },
          [&](const fn::PhiS& k) -> LipschitzValue {
            return {ramp(std::min(0.0, k.s), std::max(0.0, k.s)) ? 1.0 : 0.0, true};
          },
          [&](const fn::TanhHalf&) -> LipschitzValue {
            const double t = std::clamp(0.0, lo, hi);
            const double th = std::tanh(0.5 * t);
            return {0.5 * (1.0 - th * th), true};
          },
          [&](const fn::FaKernel& k) -> LipschitzValue {
            if (ramp(-k.a, k.a) || (lo <= k.a && hi >= -k.a)) return {1.0 / (k.a * k.a), true};
            const double m = std::min(std::abs(lo), std::abs(hi));
            return {1.0 / (m * m), true};
          },
          [&](const fn::PiecewiseLinear& k) -> LipschitzValue {
            double best = 0.0;
            const auto& kn = k.knots;
            for (std::size_t seg = 0; seg <= kn.size(); ++seg) {
              const double a = seg == 0 ? -std::numeric_limits<double>::infinity() : kn[seg - 1].first;
              const double b = seg == kn.size() ? std::numeric_limits<double>::infinity() : kn[seg].first;
              const bool hit = width > 0.0 ? interval_overlap(lo, hi, a, b) > 0.0 : (lo >= a && lo <= b);
              if (hit) best = std::max(best, std::abs(detail::pl_slope(k, seg)));
            }
            return {best, true};
          },
          [&](const fn::Gaussian&) -> LipschitzValue {
            const double c = 1.0 / std::sqrt(2.0);
            double best = 0.0;
            for (double t : {lo, hi, std::clamp(c, lo, hi), std::clamp(-c, lo, hi)})
              best = std::max(best, 2.0 * std::abs(t) * std::exp(-t * t));
            return {best, true};
          },
          [&](const fn::Exp&) -> LipschitzValue { return {std::exp(hi), true}; },
          [&](const fn::Logistic&) -> LipschitzValue {
            const double t = std::clamp(0.0, lo, hi);
            const double s = 1.0 / (1.0 + std::exp(-t));
            return {s * (1.0 - s), true};
          },
          [&](const fn::Reciprocal&) -> LipschitzValue {
            if (lo <= 0.0 && hi >= 0.0) return {std::numeric_limits<double>::infinity(), true};
            const double m = std::min(std::abs(lo), std::abs(hi));
            return {1.0 / (m * m), true};
          },
          [&](const fn::Custom& k) -> LipschitzValue { return probe_lower(k.value); },
          [&](const auto&) -> LipschitzValue {
            // Circle kinds: the window is ignored; |f'| is probed on the whole circle.
            const fn::TrigPoly t = trig_coefficients(f);
            int nonzero = 0;
            double exact = 0.0;
            for (int k = -t.degree; k <= t.degree; ++k)
              if (t.coeff(k) != cplx{}) {
                ++nonzero;
                exact = std::abs(static_cast<double>(k) * t.coeff(k));
              }
            if (nonzero <= 1) return {exact, true};
            double best = 0.0;
            const std::size_t n = 4096 + 64 * static_cast<std::size_t>(t.degree);
            for (std::size_t i = 0; i < n; ++i) {
              const cplx z = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
              best = std::max(best, std::abs(derivative(f, z)));
            }
            return {best, false};
          },
      },
      f.kind());
}

// ---------------------------------------------------------------- second derivative

struct MeasureSummary {
  std::vector<std::pair<double, cplx>> atoms;
  double total_variation = 0.0;

  static MeasureSummary from_atoms(std::vector<std::pair<double, cplx>> atoms) {
    MeasureSummary m;
    for (auto& a : atoms)
      if (a.second != cplx{}) m.atoms.push_back(a);
    for (const auto& a : m.atoms) m.total_variation += std::abs(a.second);
    return m;
  }
  cplx total_mass() const {
    cplx s = 0.0;
    for (const auto& a : atoms) s += a.second;
    return s;
  }
};

inline MeasureSummary second_derivative_summary(const ScalarFn& f) {
  return std::visit(
      overloaded{
          [](const fn::Abs&) { return MeasureSummary::from_atoms({{0.0, 2.0}}); },
          [](const fn::Kappa&) { return MeasureSummary::from_atoms({{-1.0, 1.0}, {1.0, -1.0}}); },
          [](const fn::PhiS& k) {
            if (k.s == 0.0) return MeasureSummary{};
            return MeasureSummary::from_atoms({{0.0, 1.0}, {k.s, -1.0}});
          },
          [](const fn::PiecewiseLinear& k) {
            std::vector<std::pair<double, cplx>> atoms;
            for (std::size_t i = 0; i < k.knots.size(); ++i)
              atoms.emplace_back(k.knots[i].first, detail::pl_slope(k, i + 1) - detail::pl_slope(k, i));
            return MeasureSummary::from_atoms(std::move(atoms));
          },
          [&](const auto&) -> MeasureSummary {
            throw UnsupportedError("second_derivative_summary: f'' of " + f.name() + " is not purely atomic");
          },
      },
      f.kind());
}

// ---------------------------------------------------------------- descriptors

inline nlohmann::json to_json(const ScalarFn& f) {
  using nlohmann::json;
  return std::visit(
      overloaded{
          [](const fn::Abs&) { return json{{"kind", "abs"}, {"params", json::object()}}; },
          [](const fn::Kappa&) { return json{{"kind", "kappa"}, {"params", json::object()}}; },
          [](const fn::PhiS& k) { return json{{"kind", "phi"}, {"params", {{"s", k.s}}}}; },
          [](const fn::TanhHalf&) { return json{{"kind", "tanh-half"}, {"params", json::object()}}; },
          [](const fn::FaKernel& k) { return json{{"kind", "fa"}, {"params", {{"a", k.a}}}}; },
          [](const fn::PiecewiseLinear& k) {
            json knots = json::array();
            for (const auto& [x, y] : k.knots) knots.push_back({x, y});
            return json{{"kind", "piecewise-linear"},
                        {"params", {{"knots", knots}, {"left_slope", k.left_slope}, {"right_slope", k.right_slope}}}};
          },
          [](const fn::TrigPoly& k) {
            json re = json::array(), im = json::array();
            for (auto c : k.coeffs) {
              re.push_back(c.real());
              im.push_back(c.imag());
            }
            return json{{"kind", "trig"}, {"params", {{"degree", k.degree}, {"re", re}, {"im", im}}}};
          },
          [](const fn::LacunarySigned& k) {
            return json{{"kind", "lacunary"},
                        {"params", {{"level", k.level}, {"signs", k.signs}, {"weights", k.weights}}}};
          },
          [](const fn::Gaussian&) { return json{{"kind", "gaussian"}, {"params", json::object()}}; },
          [](const fn::Exp&) { return json{{"kind", "exp"}, {"params", json::object()}}; },
          [](const fn::Logistic&) { return json{{"kind", "logistic"}, {"params", json::object()}}; },
          [](const fn::Reciprocal&) { return json{{"kind", "reciprocal"}, {"params", json::object()}}; },
          [](const fn::Custom& k) -> json {
            throw UnsupportedError("to_json: custom function " + k.name + " has no descriptor");
          },
      },
      f.kind());
}

inline ScalarFn scalar_fn_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const auto& p = j.contains("params") ? j.at("params") : nlohmann::json::object();
  if (kind == "abs") return ScalarFn::abs();
  if (kind == "kappa") return ScalarFn::kappa();
  if (kind == "phi") return ScalarFn::phi(p.at("s").get<double>());
  if (kind == "tanh-half") return ScalarFn::tanh_half();
  if (kind == "fa") return ScalarFn::fa(p.at("a").get<double>());
  if (kind == "piecewise-linear") {
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : p.at("knots")) knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
    return ScalarFn::piecewise_linear(std::move(knots), p.value("left_slope", 0.0), p.value("right_slope", 0.0));
  }
  if (kind == "trig") {
    const auto re = p.at("re").get<std::vector<double>>();
    const auto im = p.at("im").get<std::vector<double>>();
    if (re.size() != im.size()) throw PreconditionError("trig descriptor: re/im length mismatch");
    std::vector<cplx> c(re.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = {re[i], im[i]};
    return ScalarFn::trig(std::move(c));
  }
  if (kind == "lacunary")
    return ScalarFn::lacunary(p.at("signs").get<std::vector<int>>(), p.at("weights").get<std::vector<double>>());
  if (kind == "gaussian") return ScalarFn::gaussian();
  if (kind == "exp") return ScalarFn::exp();
  if (kind == "logistic") return ScalarFn::logistic();
  if (kind == "reciprocal") return ScalarFn::reciprocal();
  throw PreconditionError("scalar_fn_from_json: unknown kind '" + kind + "'");
}

// Short command-line form: abs, kappa, phi:S, tanh-half, fa:A, gaussian, exp, logistic,
// reciprocal, triangle, linear:ALPHA[,BETA].
inline ScalarFn parse_scalar_fn(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw PreconditionError("parse_scalar_fn: bad number in '" + spec + "'");
    }
    if (used != s.size()) throw PreconditionError("parse_scalar_fn: bad number in '" + spec + "'");
    return v;
  };
  if (head == "abs") return ScalarFn::abs();
  if (head == "kappa") return ScalarFn::kappa();
  if (head == "phi") return ScalarFn::phi(num(arg));
  if (head == "tanh-half") return ScalarFn::tanh_half();
  if (head == "fa") return ScalarFn::fa(num(arg));
  if (head == "gaussian") return ScalarFn::gaussian();
  if (head == "exp") return ScalarFn::exp();
  if (head == "logistic") return ScalarFn::logistic();
  if (head == "reciprocal") return ScalarFn::reciprocal();
  if (head == "triangle") return ScalarFn::triangle();
  if (head == "linear") {
    const auto comma = arg.find(',');
    if (comma == std::string::npos) return ScalarFn::linear(num(arg));
    return ScalarFn::linear(num(arg.substr(0, comma)), num(arg.substr(comma + 1)));
  }
  throw PreconditionError("parse_scalar_fn: unknown function '" + spec + "'");
}

}  // namespace oplab
