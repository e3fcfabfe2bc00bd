#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "oplab/errors.hpp"
#include "oplab/fourier_hat.hpp"
#include "oplab/report.hpp"
#include "oplab/scalar_fn.hpp"
#include "oplab/schur.hpp"
#include "oplab/spectral.hpp"

namespace oplab {

// ---------------------------------------------------------------- compact sets

class CompactSetDescr {
 public:
  CompactSetDescr() = default;
  CompactSetDescr(std::vector<std::pair<double, double>> intervals, std::vector<double> points = {}) {
    for (const auto& [a, b] : intervals) {
      if (!(std::isfinite(a) && std::isfinite(b)) || a > b) throw PreconditionError("CompactSetDescr: bad interval");
      parts_.emplace_back(a, b);
    }
    for (double p : points) {
      if (!std::isfinite(p)) throw PreconditionError("CompactSetDescr: non-finite point");
      parts_.emplace_back(p, p);
    }
    std::sort(parts_.begin(), parts_.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& c : parts_) {
      if (!merged.empty() && c.first <= merged.back().second)
        merged.back().second = std::max(merged.back().second, c.second);
      else
        merged.push_back(c);
    }
    parts_ = std::move(merged);
  }

  static CompactSetDescr interval(double a, double b) { return CompactSetDescr({{a, b}}); }
  static CompactSetDescr points(std::vector<double> p) { return CompactSetDescr({}, std::move(p)); }

  // Disjoint closed components in ascending order; isolated points have a == b.
  const std::vector<std::pair<double, double>>& components() const { return parts_; }
  bool empty() const { return parts_.empty(); }
  double lo() const { return parts_.front().first; }
  double hi() const { return parts_.back().second; }

  double distance(double x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : parts_) d = std::min(d, x < a ? a - x : (x > b ? x - b : 0.0));
    return d;
  }

 private:
  std::vector<std::pair<double, double>> parts_;
};

namespace detail {

// Greedy left-to-right cover of F by closed balls of radius r. With centers_in_f the centers are
// clipped into their component (nets inside F); otherwise the cover is minimal.
inline std::vector<double> greedy_cover(const CompactSetDescr& F, double r, bool centers_in_f) {
  std::vector<double> centers;
  const double slack = 1e-12 * std::max({1.0, std::abs(F.lo()), std::abs(F.hi())});
  double covered = -std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : F.components()) {
    if (b <= covered + slack) continue;
    const double start = a > covered ? a : covered;
    for (long k = 0;; ++k) {
      double c = start + static_cast<double>(2 * k + 1) * r;
      if (centers_in_f) c = std::min(c, b);
      centers.push_back(c);
      covered = c + r;
      if (covered >= b - slack) break;
    }
  }
  return centers;
}

}  // namespace detail

struct EntropyResult {
  double K = 0.0;
  std::size_t cardinality = 0;
  std::vector<double> net;
  std::vector<double> packing;  // points of F pairwise more than 2 eps apart
  bool packing_certifies = false;  // packing.size() >= cardinality, so no smaller net exists
};

inline EntropyResult epsilon_entropy(const CompactSetDescr& F, double eps) {
  if (F.empty()) throw PreconditionError("epsilon_entropy: empty set");
  if (!(eps > 0.0)) throw PreconditionError("epsilon_entropy: eps must be positive");
  EntropyResult r;
  r.net = detail::greedy_cover(F, eps, false);
  r.cardinality = r.net.size();
  r.K = std::log(static_cast<double>(r.cardinality));
  // Any ball of radius eps holds at most one of these points.
  const double eta = 1e-9 * std::max(1.0, eps);
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : F.components()) {
    double x = std::max(a, last + 2.0 * eps + eta);
    while (x <= b) {
      r.packing.push_back(x);
      last = x;
      x = last + 2.0 * eps + eta;
    }
  }
  r.packing_certifies = r.packing.size() >= r.cardinality;
  return r;
}

// ---------------------------------------------------------------- triples and witnesses

struct OperatorTriple {
  HermitianMatrix A;
  HermitianMatrix B;
  GeneralMatrix R;
  std::string label;

  OperatorTriple(HermitianMatrix a, HermitianMatrix b, GeneralMatrix r, std::string lbl = {})
      : A(std::move(a)), B(std::move(b)), R(std::move(r)), label(std::move(lbl)) {
    if (R.rows() != A.dim() || R.cols() != B.dim())
      throw PreconditionError("OperatorTriple: R must map the space of B to the space of A");
  }

  GeneralMatrix commutator() const { return A.matrix() * R - R * B.matrix(); }
};

inline GeneralMatrix quasicommutator(const ScalarFn& f, const OperatorTriple& t) {
  return apply_fn(f, t.A).matrix() * t.R - t.R * apply_fn(f, t.B).matrix();
}

inline double spectral_hull_lip(const ScalarFn& f, const RealVector& la, const RealVector& lb) {
  const double lo = std::min(la.minCoeff(), lb.minCoeff());
  const double hi = std::max(la.maxCoeff(), lb.maxCoeff());
  return lip_const(f, lo, hi).value;
}

// Scale for the residual contract: (1 + ||AR - RB||)(1 + Lip).
inline double doi_scale(const ScalarFn& f, const OperatorTriple& t) {
  const auto ea = eig_hermitian(t.A);
  const auto eb = eig_hermitian(t.B);
  return (1.0 + op_norm(t.commutator())) * (1.0 + spectral_hull_lip(f, ea.eigenvalues, eb.eigenvalues));
}

// || U (Delta0 f(lambda_A, lambda_B) * (U^* (AR - RB) V)) V^* - (f(A)R - Rf(B)) ||.
inline double doi_identity_residual(const ScalarFn& f, const OperatorTriple& t) {
  const auto ea = eig_hermitian(t.A);
  const auto eb = eig_hermitian(t.B);
  const std::vector<double> la(ea.eigenvalues.data(), ea.eigenvalues.data() + ea.eigenvalues.size());
  const std::vector<double> lb(eb.eigenvalues.data(), eb.eigenvalues.data() + eb.eigenvalues.size());
  const GeneralMatrix d0 = divided_diff_values(f, la, lb, DiagonalRule::Zero);
  const GeneralMatrix inner = ea.basis.adjoint() * t.commutator() * eb.basis;
  const GeneralMatrix doi = ea.basis * d0.cwiseProduct(inner) * eb.basis.adjoint();
  const GeneralMatrix direct = apply_fn(f, t.A, ea).matrix() * t.R - t.R * apply_fn(f, t.B, eb).matrix();
  return op_norm(doi - direct);
}

struct WitnessMeasured {
  double norm_R = 0.0;
  double norm_commut = 0.0;
  double norm_fcommut = 0.0;
};

struct WitnessBundle {
  OperatorTriple triple;
  double delta = 0.0;
  WitnessMeasured measured;
  double certified_lower = 0.0;  // lower bound on the commutator modulus at delta
  double scale = 1.0;            // normalization applied to R
};

inline WitnessMeasured measure_bundle(const ScalarFn& f, const OperatorTriple& t) {
  return {op_norm(t.R), op_norm(t.commutator()), op_norm(quasicommutator(f, t))};
}

// Re-verification from the raw matrices, independent of the solver.
inline bool bundle_valid(const ScalarFn& f, const WitnessBundle& b) {
  const auto m = measure_bundle(f, b.triple);
  return m.norm_R <= 1.0 + 1e-9 && m.norm_commut <= b.delta + 1e-9 && m.norm_fcommut >= b.certified_lower - 1e-8;
}

inline void check_separation(const Grid& L, const Grid& M, double delta) {
  for (double l : L.reals())
    for (double m : M.reals()) {
      const double d = l - m;
      if (d != 0.0 && std::abs(d) < delta) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "separation violated: |" << l << " - " << m << "| < delta = " << delta;
        throw PreconditionError(msg.str());
      }
    }
}

// A = diag(L), B = diag(M), R = s (delta/2) (Phi * k0) with Phi(x, y) = f_delta(x - y) and k0 the
// certificate witness with coincident pairs removed. On separated pairs (x - y) Phi = 1, so
// f(A)R - Rf(B) = s (delta/2) (Delta0 f * k).
inline WitnessBundle omega_lower_witness(const ScalarFn& f, const Grid& L, const Grid& M, double delta,
                                         const MultiplierCertificate& cert) {
  if (!(delta > 0.0)) throw PreconditionError("omega_lower_witness: delta must be positive");
  check_separation(L, M, delta);
  const auto& x = L.reals();
  const auto& y = M.reals();
  const auto m = static_cast<Eigen::Index>(x.size());
  const auto n = static_cast<Eigen::Index>(y.size());
  if (cert.lower.witness.rows() != m || cert.lower.witness.cols() != n)
    throw PreconditionError("omega_lower_witness: certificate shape does not match the grids");
  const double kn = op_norm(cert.lower.witness);
  GeneralMatrix k = kn > 0.0 ? GeneralMatrix(cert.lower.witness / kn) : GeneralMatrix::Zero(m, n);
  const ScalarFn phi = ScalarFn::fa(delta);
  GeneralMatrix r0(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)];
      if (d == 0.0) k(i, j) = 0.0;
      r0(i, j) = 0.5 * delta * eval(phi, d) * k(i, j);
    }
  OperatorTriple t0(HermitianMatrix::diagonal(x), HermitianMatrix::diagonal(y), r0, "omega-lower " + f.name());
  const double nr = op_norm(r0);
  const double nc = op_norm(t0.commutator());
  double s = 1.0;
  if (nr > 1.0) s = std::min(s, 1.0 / nr);
  if (nc > delta) s = std::min(s, delta / nc);
  // Leave room for rounding in the re-verification.
  if (s < 1.0) s *= 1.0 - 1e-12;
  OperatorTriple t(t0.A, t0.B, s * r0, t0.label);
  WitnessBundle b{t, delta, measure_bundle(f, t), 0.0, s};
  b.certified_lower = kn > 0.0 ? s * 0.5 * delta * cert.lower.value : 0.0;
  return b;
}

// ---------------------------------------------------------------- upper bounds

// Upper estimate of the scalar modulus of f on F: exact for clamp kinds, else Lipschitz * t.
inline double modulus_on_set_upper(const ScalarFn& f, const CompactSetDescr& F, double t) {
  if (f.is<fn::Abs>() || f.is<fn::Kappa>() || f.is<fn::PhiS>()) {
    // Each of these is 1-Lipschitz with |slope| 1 exactly on one interval, so the sup over
    // |x - y| <= t in F is bounded by min(t, measure of the ramp met by the hull).
    const double ramp_len = f.is<fn::Abs>() ? F.hi() - F.lo()
                                            : interval_overlap(F.lo(), F.hi(),
                                                               f.is<fn::Kappa>() ? -1.0 : std::min(0.0, f.as<fn::PhiS>().s),
                                                               f.is<fn::Kappa>() ? 1.0 : std::max(0.0, f.as<fn::PhiS>().s));
    return std::min(t, ramp_len);
  }
  const auto lip = lip_const(f, F.lo(), F.hi());
  if (!lip.exact) throw UnsupportedError("modulus upper: no exact Lipschitz constant for " + f.name());
  double v = lip.value * t;
  if (auto s = f.sup_norm()) v = std::min(v, 2.0 * *s);
  return v;
}

struct NetUpperOptions {
  MultNormOptions solver{1e-3, 400, 1024, 0};
};

// Net-based upper bound on the commutator modulus: 2 omega(delta/2) + 2 delta ||Delta0 f||_mult(net).
inline BoundRecord omega_upper_net(const ScalarFn& f, const CompactSetDescr& F, double delta, double net_resolution,
                                   const NetUpperOptions& opts = {}) {
  if (F.empty()) throw PreconditionError("omega_upper_net: empty set");
  if (!(delta > 0.0)) throw PreconditionError("omega_upper_net: delta must be positive");
  if (!(net_resolution > 0.0 && net_resolution <= delta / 2.0))
    throw PreconditionError("omega_upper_net: net_resolution must lie in (0, delta/2]");
  std::vector<double> net = detail::greedy_cover(F, net_resolution, true);
  if (F.hi() - F.lo() <= delta) {
    // Degenerate case: one point of F nearest the middle of its hull.
    const double mid = 0.5 * (F.lo() + F.hi());
    double best = F.lo();
    for (const auto& [a, b] : F.components()) {
      const double c = std::clamp(mid, a, b);
      if (std::abs(c - mid) < std::abs(best - mid)) best = c;
    }
    net = {best};
  }
  std::sort(net.begin(), net.end());
  net.erase(std::unique(net.begin(), net.end()), net.end());
  const Grid g = Grid::line(net);
  double upper = 0.0;
  double lower = 0.0;
  bool converged = true;
  if (net.size() > 1) {
    const auto cert = mult_norm(difference_quotient_problem(f, g, g), opts.solver);
    upper = cert.upper.value;
    lower = cert.lower.value;
    converged = cert.converged;
  }
  const double w = modulus_on_set_upper(f, F, delta / 2.0);
  const double rhs = 2.0 * w + 2.0 * delta * upper;
  const double lhs = modulus_on_set_upper(f, F, delta);
  std::ostringstream notes;
  notes << "rhs bounds the commutator modulus at delta; lhs is the scalar modulus (a lower bound)";
  if (!converged) notes << "; net solver stopped early, upper still certified";
  return make_record("omega_upper_net",
                     {{"fn", f.name()},
                      {"delta", delta},
                      {"net_size", net.size()},
                      {"net_resolution", net_resolution},
                      {"mult_upper", upper},
                      {"mult_lower", lower}},
                     lhs, rhs, notes.str());
}

struct IntegralResult {
  double value = 0.0;
  double tail = 0.0;
  std::string constant_note = "constant unspecified";
};

// int_e^inf f(delta s) ds / (s^2 log s) = int_1^inf f(delta e^u) e^{-u} / u du.
inline IntegralResult concave_upper_integral(const ScalarFn& f, double delta) {
  if (!(delta > 0.0)) throw PreconditionError("concave_upper_integral: delta must be positive");
  for (int k = -6; k <= 3; ++k) {
    const double t = -std::pow(10.0, k);
    if (std::abs(eval(f, t)) > 1e-14)
      throw PreconditionError("concave_upper_integral: f does not vanish at t = " + fmt_num(t));
  }
  std::vector<double> t;
  for (int k = -60; k <= 60; ++k) t.push_back(std::pow(10.0, k / 10.0));
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = eval(f, t[i]);
  const double tiny = 1e-12 * std::max(1.0, std::abs(v.back()));
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (v[i] < v[i - 1] - tiny)
      throw PreconditionError("concave_upper_integral: f decreases near t = " + fmt_num(t[i]));
    const double r0 = v[i - 1] / t[i - 1];
    if (v[i] / t[i] > r0 + 1e-12 * std::max(1.0, std::abs(r0)))
      throw PreconditionError("concave_upper_integral: f(t)/t increases near t = " + fmt_num(t[i]));
  }
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const double s0 = (v[i] - v[i - 1]) / (t[i] - t[i - 1]);
    const double s1 = (v[i + 1] - v[i]) / (t[i + 1] - t[i]);
    if (s1 > s0 + 1e-9 * std::max(1.0, std::abs(s0)))
      throw PreconditionError("concave_upper_integral: f is not concave near t = " + fmt_num(t[i]));
  }
  const bool zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
  if (zero) return {0.0, 0.0};
  if (v.back() / t.back() > 0.5 * v.front() / t.front())
    throw PreconditionError("concave_upper_integral: f is not sublinear on the probe; the integral diverges");

  auto integrand = [&](double u) { return eval(f, delta * std::exp(u)) * std::exp(-u) / u; };
  double total = 0.0;
  double prev_chunk = 0.0;
  for (int k = 1; k < 700; ++k) {
    const double chunk = detail::integrate_adaptive(integrand, k, k + 1.0, 1e-13);
    total += chunk;
    if (k > 3 && prev_chunk > 0.0) {
      const double rho = chunk / prev_chunk;
      if (rho < 0.9) {
        const double tail = chunk * rho / (1.0 - rho);
        if (tail <= 1e-6 * total) return {total + tail, tail};
      }
    }
    if (chunk == 0.0 && k > 3) return {total, 0.0};
    prev_chunk = chunk;
  }
  throw PreconditionError("concave_upper_integral: integrand tail does not decay");
}

// delta int_delta^inf omega(t)/t^2 dt, omega from the probe; beyond the probe diameter D,
// omega is constant and the tail is omega(D)/D.
inline IntegralResult modnep_upper_integral(const ScalarFn& f, double delta, const Grid& probe) {
  if (!(delta > 0.0)) throw PreconditionError("modnep_upper_integral: delta must be positive");
  double diam = 0.0;
  if (probe.carrier() == Carrier::RealLine)
    diam = probe.back() - probe.front();
  else
    diam = 2.0;
  if (!(diam > 0.0)) return {0.0, 0.0};
  auto omega = [&](double t) { return scalar_modulus(f, t, probe).value; };
  const double od = omega(diam);
  if (!std::isfinite(od)) throw PreconditionError("modnep_upper_integral: unbounded modulus, tail diverges");
  const double tail = od / diam;
  if (delta >= diam) return {od, od};
  // v = log t: int omega(e^v) e^{-v} dv over [log delta, log D].
  auto g = [&](double v) { return omega(std::exp(v)) * std::exp(-v); };
  const double a = std::log(delta);
  const double b = std::log(diam);
  const int pieces = std::max(1, static_cast<int>(std::ceil(b - a)));
  double body = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + (b - a) * i / pieces;
    const double hi = a + (b - a) * (i + 1) / pieces;
    body += detail::integrate_adaptive(g, lo, hi, 1e-12 / delta);
  }
  return {delta * (body + tail), delta * tail};
}

inline double fM_upper(const MeasureSummary& mu, double delta) {
  if (!(delta > 0.0)) throw PreconditionError("fM_upper: delta must be positive");
  if (std::abs(mu.total_mass()) > 1e-12)
    throw PreconditionError("fM_upper: total mass of f'' is nonzero, so the modulus is infinite for every t > 0");
  return mu.total_variation * delta * std::log(std::log(1.0 / delta + 3.0));
}

enum class GrowthKind { LipConv, HolConv, Bound911 };

struct GrowthParams {
  double a = 1.0;      // f'_+(0)
  double M = 1.0;      // sup f
  double delta = 0.0;
  double alpha = 0.0;
  double holder_norm = 1.0;
  double x = 4.0;
};

inline double growth_bound(GrowthKind kind, const GrowthParams& p) {
  switch (kind) {
    case GrowthKind::LipConv:
      if (!(p.a > 0.0 && p.M > 0.0 && p.delta > 0.0 && p.delta < p.M / (3.0 * p.a)))
        throw PreconditionError("lipconv: need a, M > 0 and 0 < delta < M/(3a)");
      return p.a * p.delta * std::log(std::log(p.M / (p.a * p.delta)));
    case GrowthKind::HolConv:
      if (!(p.alpha >= 0.0 && p.alpha < 1.0 && p.delta > 0.0))
        throw PreconditionError("holconv: need 0 <= alpha < 1 and delta > 0");
      return std::log(2.0 / (1.0 - p.alpha)) * p.holder_norm * std::pow(p.delta, p.alpha);
    case GrowthKind::Bound911:
      if (!(p.x >= 4.0)) throw PreconditionError("bound911: need x >= 4");
      return p.x / std::log(std::log(p.x));
  }
  throw PreconditionError("growth_bound: unknown kind");
}

// ---------------------------------------------------------------- ratios

inline BoundRecord qcom_ratio(const ScalarFn& f, const OperatorTriple& t, const CompactSetDescr& F) {
  const auto ea = eig_hermitian(t.A);
  const auto eb = eig_hermitian(t.B);
  for (Eigen::Index k = 0; k < ea.eigenvalues.size(); ++k)
    if (F.distance(ea.eigenvalues(k)) > 1e-9 * std::max(1.0, std::abs(ea.eigenvalues(k))))
      throw PreconditionError("qcom_ratio: eigenvalue " + fmt_num(ea.eigenvalues(k)) + " of A lies outside F");
  const double eps = op_norm(t.commutator());
  const double lhs = op_norm(apply_fn(f, t.A, ea).matrix() * t.R - t.R * apply_fn(f, t.B, eb).matrix());
  const double lip = spectral_hull_lip(f, ea.eigenvalues, eb.eigenvalues);
  double K = 0.0;
  std::size_t card = 1;
  if (eps > 0.0) {
    const auto e = epsilon_entropy(F, eps);
    K = e.K;
    card = e.cardinality;
  }
  const double rhs = (1.0 + K) * lip * eps;
  return make_record("qcom_ratio",
                     {{"fn", f.name()}, {"n", t.A.dim()}, {"eps", eps}, {"K", K}, {"cardinality", card}, {"lip", lip}},
                     lhs, rhs, "rhs constant taken as 1");
}

inline BoundRecord logn_sharp_constant(const Grid& X, const MultNormOptions& opts = {}) {
  const auto cert = mult_norm(difference_quotient_problem(ScalarFn::abs(), X, X), opts);
  const double rhs = 1.0 + std::log(static_cast<double>(X.size()));
  return make_record("logn_sharp_constant",
                     {{"card", X.size()}, {"mult_lower", cert.lower.value}, {"gap", cert.gap}},
                     cert.upper.value, rhs, "lhs is the certified upper value of ||Delta0 Abs||_mult on X x X");
}

// ---------------------------------------------------------------- Kato sweep

struct KatoGrids {
  Grid lambda;  // {0} and -delta 2^k
  Grid mu;      // delta 2^k, k >= 0, up to a
};

inline KatoGrids kato_grids(double a, double delta) {
  if (!(delta > 0.0 && delta < a)) throw PreconditionError("kato: need 0 < delta < a");
  std::vector<double> pos;
  for (double x = delta; x <= a * (1.0 + 1e-12); x *= 2.0) pos.push_back(x);
  std::vector<double> neg{0.0};
  for (double x : pos) neg.push_back(-x);
  return {Grid::line(neg), Grid::line(pos)};
}

struct KatoPoint {
  double delta = 0.0;
  MultiplierCertificate cert;
  WitnessBundle bundle;
  BoundRecord record;
};

inline KatoPoint kato_point(double a, double delta, const MultNormOptions& opts = {}) {
  const auto g = kato_grids(a, delta);
  const ScalarFn f = ScalarFn::abs();
  auto cert = mult_norm(difference_quotient_problem(f, g.lambda, g.mu), opts);
  auto bundle = omega_lower_witness(f, g.lambda, g.mu, delta, cert);
  const double profile = delta * std::log(2.0 + std::log(std::max(1.0, a / delta)));
  auto rec = make_record("kato",
                         {{"a", a},
                          {"delta", delta},
                          {"grid_size", g.mu.size()},
                          {"omega_flat_lower", bundle.certified_lower},
                          {"measured_fcommut", bundle.measured.norm_fcommut},
                          {"mult_lower", cert.lower.value},
                          {"mult_upper", cert.upper.value}},
                         bundle.certified_lower / 2.0, profile,
                         "lhs bounds the operator modulus (commutator lower halved); rhs is the profile with constant 1");
  return {delta, std::move(cert), std::move(bundle), std::move(rec)};
}

inline std::vector<KatoPoint> kato_experiment(double a, const std::vector<double>& deltas, const MultNormOptions& opts = {}) {
  std::vector<KatoPoint> out;
  for (double d : deltas) out.push_back(kato_point(a, d, opts));
  return out;
}

// Least squares y = c x through the origin and the largest relative residual.
struct ProfileFit {
  double c = 0.0;
  double max_rel_residual = 0.0;
};

inline ProfileFit fit_through_origin(const std::vector<double>& x, const std::vector<double>& y) {
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  ProfileFit f;
  f.c = sxx > 0.0 ? sxy / sxx : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (y[i] != 0.0) f.max_rel_residual = std::max(f.max_rel_residual, std::abs(y[i] - f.c * x[i]) / std::abs(y[i]));
  return f;
}

// ---------------------------------------------------------------- truncated series

struct LevelWitness {
  double s = 0.0;
  OperatorTriple triple;
  double norm_commut = 0.0;
  double measured = 0.0;        // ||f(A)R - Rf(B)||
  double measured_level = 0.0;  // ||phi_s(A)R - R phi_s(B)||
  double decomposition_residual = 0.0;
};

struct PathologicalSeries {
  ScalarFn f;
  std::vector<double> alphas;
  std::vector<LevelWitness> levels;
  std::vector<std::string> warnings;
};

// f = sum alpha_n phi_{s_n}, alpha_n = n / log log s_n. Level n uses the Kato witness with a = 0.9,
// delta = 2/s_n, moved to A = s I + (s/2) A0 so the spectra sit in (s/2, 3s/2).
inline PathologicalSeries pathological_series(const std::vector<double>& s, const MultNormOptions& opts = {}) {
  if (s.empty()) throw PreconditionError("pathological_series: empty level list");
  if (s.front() < 10.0) throw PreconditionError("pathological_series: s_1 must be >= 10");
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] < 2.0 * s[i - 1]) throw PreconditionError("pathological_series: need s_{n+1} >= 2 s_n");
  PathologicalSeries out{ScalarFn::abs(), {}, {}, {}};
  for (std::size_t n = 1; n <= s.size(); ++n) {
    const double ll = std::log(std::log(s[n - 1]));
    out.alphas.push_back(static_cast<double>(n) / ll);
    if (ll < std::pow(static_cast<double>(n), 3))
      out.warnings.push_back("level " + std::to_string(n) + ": log log s = " + fmt_num(ll) + " < n^3");
  }
  std::vector<std::pair<double, double>> knots{{0.0, 0.0}};
  for (double x : s) {
    double y = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) y += out.alphas[k] * std::min(x, s[k]);
    knots.emplace_back(x, y);
  }
  out.f = ScalarFn::piecewise_linear(std::move(knots));

  for (std::size_t n = 0; n < s.size(); ++n) {
    const double sn = s[n];
    const auto kp = kato_point(0.9, 2.0 / sn, opts);
    const auto& t0 = kp.bundle.triple;
    const GeneralMatrix a = sn * GeneralMatrix::Identity(t0.A.dim(), t0.A.dim()) + 0.5 * sn * t0.A.matrix();
    const GeneralMatrix b = sn * GeneralMatrix::Identity(t0.B.dim(), t0.B.dim()) + 0.5 * sn * t0.B.matrix();
    OperatorTriple t(HermitianMatrix(a), HermitianMatrix(b), t0.R, "series level " + std::to_string(n + 1));
    LevelWitness w{sn, t, op_norm(t.commutator()), op_norm(quasicommutator(out.f, t)),
                   op_norm(quasicommutator(ScalarFn::phi(sn), t)), 0.0};
    // phi_{s_k}(A_n) = s_k I for k < n and = A_n for k > n.
    double resid = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (k == n) continue;
      const GeneralMatrix pa = apply_fn(ScalarFn::phi(s[k]), t.A).matrix();
      const GeneralMatrix expect = k < n ? GeneralMatrix(s[k] * GeneralMatrix::Identity(a.rows(), a.cols())) : t.A.matrix();
      resid = std::max(resid, op_norm(pa - expect) / std::max(1.0, s[k]));
    }
    w.decomposition_residual = resid;
    out.levels.push_back(std::move(w));
  }
  return out;
}

}  // namespace oplab
