// oplab: command-line front end for the operator-modulus laboratory.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oplab/oplab.hpp"

namespace {

using nlohmann::json;
using namespace oplab;

struct Common {
  std::uint64_t seed = 0;
  double tol = 1e-4;
  std::string out = ".";
  std::string format = "both";
  int jobs = 1;
};

struct Outcome {
  json params = json::object();
  std::vector<BoundRecord> records;
  std::string tsv_x;  // parameter used as the x column of the plot table; empty for none
  std::vector<std::string> violations;
};

MultNormOptions solver_options(const Common& c) {
  MultNormOptions o;
  o.tol = c.tol;
  o.seed = c.seed;
  return o;
}

// "a,b;c,d" -> intervals.
std::vector<std::pair<double, double>> parse_intervals(const std::string& s) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ';')) {
    const auto comma = part.find(',');
    if (comma == std::string::npos) throw PreconditionError("interval '" + part + "' must be lo,hi");
    try {
      out.emplace_back(std::stod(part.substr(0, comma)), std::stod(part.substr(comma + 1)));
    } catch (const std::logic_error&) {
      throw PreconditionError("interval '" + part + "' is not numeric");
    }
  }
  return out;
}

std::vector<double> dyadic(int kmin, int kmax) {
  if (kmin > kmax) throw PreconditionError("need kmin <= kmax");
  std::vector<double> d;
  for (int k = kmin; k <= kmax; ++k) d.push_back(std::ldexp(1.0, -k));
  return d;
}

Grid symmetric_integers(int n) {
  std::vector<double> pts;
  for (int k = 1; k <= n; ++k) {
    pts.push_back(k);
    pts.push_back(-k);
  }
  return Grid::line(pts);
}

// ---------------------------------------------------------------- commands

struct DoiArgs {
  int n = 8;
  int trials = 20;
  std::string fn = "abs";
  double box = 3.0;
};

Outcome run_doi(const Common& c, const DoiArgs& a) {
  if (a.n < 1 || a.trials < 1) throw PreconditionError("doi-check: n and trials must be >= 1");
  std::vector<std::string> names;
  if (a.fn == "all")
    names = {"abs", "kappa", "phi:2", "tanh-half"};
  else
    names = {a.fn};
  Outcome o;
  o.params = {{"n", a.n}, {"trials", a.trials}, {"fn", a.fn}, {"box", a.box}};
  o.tsv_x = "trial";
  for (const auto& name : names) {
    const ScalarFn f = parse_scalar_fn(name);
    std::vector<int> idx(static_cast<std::size_t>(a.trials));
    for (int t = 0; t < a.trials; ++t) idx[static_cast<std::size_t>(t)] = t;
    auto recs = parallel_map(
        idx,
        [&](int t) {
          const std::uint64_t s = c.seed * 1000003u + static_cast<std::uint64_t>(t) * 3u;
          const auto A = random_hermitian(a.n, -a.box, a.box, s);
          const auto B = random_hermitian(a.n, -a.box, a.box, s + 1);
          std::mt19937_64 rng(s + 2);
          GeneralMatrix R = random_general(a.n, a.n, rng);
          R /= op_norm(R);
          const OperatorTriple tr(A, B, R);
          const double res = doi_identity_residual(f, tr);
          return make_record("doi_residual", {{"fn", f.name()}, {"n", a.n}, {"trial", t}, {"seed", s}}, res,
                             1e-9 * doi_scale(f, tr), "rhs is the residual contract");
        },
        c.jobs);
    for (auto& r : recs) {
      if (r.lhs > r.rhs) o.violations.push_back("doi residual above contract for " + r.params["fn"].get<std::string>());
      o.records.push_back(std::move(r));
    }
  }
  return o;
}

struct MultArgs {
  std::string builtin;
  std::vector<int> n{4};
  std::string fn = "abs";
  std::string kernel = "divided-difference";
  std::vector<double> points;
};

Outcome run_multnorm(const Common& c, const MultArgs& a) {
  Outcome o;
  o.params = {{"builtin", a.builtin}, {"n", a.n}, {"fn", a.fn}, {"kernel", a.kernel}, {"points", a.points}};
  o.tsv_x = "n";
  auto problem = [&](int n) -> std::pair<MultiplierProblem, double> {
    if (a.builtin == "hilbert") return {hilbert_multiplier(n), std::numbers::pi / 2.0};
    if (a.builtin == "toral-lambda") return {toral_lambda(n), toral_lambda_exact(n)};
    if (a.builtin == "diffquot") {
      if (a.kernel == "sum-ratio") {
        std::vector<double> pts = a.points;
        if (pts.empty())
          for (int k = 0; k <= n; ++k) pts.push_back(std::ldexp(1.0, k));
        const Grid g = Grid::line(pts);
        return {sum_ratio_problem(g, g), 0.0};
      }
      if (a.kernel != "divided-difference") throw PreconditionError("multnorm: unknown kernel " + a.kernel);
      const Grid g = a.points.empty() ? symmetric_integers(n) : Grid::line(a.points);
      return {difference_quotient_problem(parse_scalar_fn(a.fn), g, g), 0.0};
    }
    throw PreconditionError("multnorm: unknown builtin '" + a.builtin + "'");
  };
  for (int n : a.n) problem(n);  // validate everything before solving
  auto recs = parallel_map(
      a.n,
      [&](int n) {
        const auto [p, ref] = problem(n);
        const auto cert = mult_norm(p, solver_options(c));
        const auto chk = verify_certificate(p.matrix, cert);
        const double rhs = ref > 0.0 ? ref : cert.lower.value;
        auto r = make_record("multnorm",
                             {{"builtin", a.builtin},
                              {"n", n},
                              {"label", cert.label},
                              {"lower", cert.lower.value},
                              {"gap", cert.gap},
                              {"iterations", cert.iterations},
                              {"converged", cert.converged},
                              {"verified", chk.ok()}},
                             cert.upper.value, rhs,
                             ref > 0.0 ? "rhs is the reference value" : "rhs is the certified lower value");
        return r;
      },
      c.jobs);
  for (auto& r : recs) {
    if (!r.params["verified"].get<bool>()) o.violations.push_back("certificate failed re-verification");
    o.records.push_back(std::move(r));
  }
  return o;
}

struct HatArgs {
  std::string fn = "fa:1";
  double lo = -1.0;
  double hi = 1.0;
  int periodization = 0;
};

Outcome run_hatnorm(const Common&, const HatArgs& a) {
  Outcome o;
  o.params = {{"fn", a.fn}, {"lo", a.lo}, {"hi", a.hi}, {"periodization", a.periodization}};
  const ScalarFn f = parse_scalar_fn(a.fn);
  const auto e = estimate_hat_norm(f, a.lo, a.hi);
  o.records.push_back(make_record("hatnorm",
                                  {{"fn", f.name()}, {"lo", a.lo}, {"hi", a.hi}, {"method", e.method},
                                   {"error_bound", e.error_bound}},
                                  e.lower, e.upper, "lhs is sup |f| on J, rhs the best construction"));
  if (e.lower > e.upper + e.error_bound + 1e-6) o.violations.push_back("sup norm exceeds the hat-norm upper bound");
  if (a.periodization > 0) {
    const auto p = periodization_coefficients(a.periodization);
    o.records.push_back(make_record("periodization",
                                    {{"N", a.periodization}, {"partial_sum", p.partial_sum_abs}, {"tail", p.tail_estimate}},
                                    p.sum_abs, periodization_target(), "rhs is the closed-form coefficient sum"));
    for (int n = -p.N; n <= p.N; ++n)
      if ((n % 2 == 0 ? 1.0 : -1.0) * p.coeff(n) < -1e-9) o.violations.push_back("periodization sign pattern broken");
  }
  return o;
}

struct LowerArgs {
  std::string fn = "abs";
  double a = 1.0;
  double delta = 1.0 / 16.0;
  std::vector<double> lambda, mu;
  bool dump = false;
};

Outcome run_omega_lower(const Common& c, const LowerArgs& a, json& dump) {
  Outcome o;
  o.params = {{"fn", a.fn}, {"a", a.a}, {"delta", a.delta}, {"lambda", a.lambda}, {"mu", a.mu}};
  const ScalarFn f = parse_scalar_fn(a.fn);
  Grid L = Grid::line({0.0});
  Grid M = Grid::line({1.0});
  if (a.lambda.empty() != a.mu.empty()) throw PreconditionError("omega-lower: give both --lambda and --mu, or neither");
  if (a.lambda.empty()) {
    const auto g = kato_grids(a.a, a.delta);
    L = g.lambda;
    M = g.mu;
  } else {
    L = Grid::line(a.lambda);
    M = Grid::line(a.mu);
  }
  check_separation(L, M, a.delta);
  const auto cert = mult_norm(difference_quotient_problem(f, L, M), solver_options(c));
  const auto b = omega_lower_witness(f, L, M, a.delta, cert);
  o.records.push_back(make_record("omega_lower",
                                  {{"fn", f.name()},
                                   {"delta", a.delta},
                                   {"rows", L.size()},
                                   {"cols", M.size()},
                                   {"norm_R", b.measured.norm_R},
                                   {"norm_commut", b.measured.norm_commut},
                                   {"scale", b.scale},
                                   {"mult_lower", cert.lower.value}},
                                  b.certified_lower, b.measured.norm_fcommut,
                                  "lhs certifies the commutator modulus; rhs is the measured witness norm"));
  if (!bundle_valid(f, b)) o.violations.push_back("witness bundle failed re-verification");
  if (a.dump)
    dump = {{"A", to_json(b.triple.A)}, {"B", to_json(b.triple.B)}, {"R", matrix_to_json(b.triple.R)},
            {"delta", a.delta}, {"certified_lower", b.certified_lower}};
  return o;
}

struct UpperArgs {
  std::string fn = "abs";
  std::string intervals = "-1,1";
  std::vector<double> points;
  std::vector<double> deltas{0.125};
  double net_resolution = 0.0;
};

Outcome run_omega_upper(const Common& c, const UpperArgs& a) {
  Outcome o;
  o.params = {{"fn", a.fn}, {"intervals", a.intervals}, {"points", a.points}, {"delta", a.deltas},
              {"net_resolution", a.net_resolution}};
  o.tsv_x = "delta";
  const ScalarFn f = parse_scalar_fn(a.fn);
  const CompactSetDescr F(parse_intervals(a.intervals), a.points);
  NetUpperOptions opts;
  opts.solver.tol = std::max(c.tol, 1e-3);
  opts.solver.seed = c.seed;
  o.records = parallel_map(
      a.deltas,
      [&](double d) { return omega_upper_net(f, F, d, a.net_resolution > 0.0 ? a.net_resolution : d / 2.0, opts); },
      c.jobs);
  return o;
}

struct KatoArgs {
  double a = 1.0;
  int kmin = 4;
  int kmax = 10;
};

Outcome run_kato(const Common& c, const KatoArgs& a) {
  Outcome o;
  o.params = {{"a", a.a}, {"kmin", a.kmin}, {"kmax", a.kmax}};
  o.tsv_x = "delta";
  const auto deltas = dyadic(a.kmin, a.kmax);
  const auto pts = parallel_map(deltas, [&](double d) { return kato_point(a.a, d, solver_options(c)); }, c.jobs);
  std::vector<double> x, y;
  for (const auto& p : pts) {
    if (!bundle_valid(ScalarFn::abs(), p.bundle)) o.violations.push_back("kato witness failed re-verification");
    o.records.push_back(p.record);
    x.push_back(p.record.rhs);
    y.push_back(p.bundle.certified_lower);
  }
  const auto fit = fit_through_origin(x, y);
  o.records.push_back(make_record("kato_fit", {{"c", fit.c}, {"points", pts.size()}}, fit.max_rel_residual, 0.3,
                                  "lhs is the largest relative residual of the profile fit"));
  return o;
}

struct ConcaveArgs {
  std::string fn = "phi:1";
  std::vector<double> deltas;
  double probe_lo = -2.0;
  double probe_hi = 2.0;
  double probe_step = 1e-3;
};

Outcome run_concave(const Common&, const ConcaveArgs& a) {
  Outcome o;
  const auto deltas = a.deltas.empty() ? dyadic(3, 8) : a.deltas;
  o.params = {{"fn", a.fn}, {"delta", deltas}, {"probe", {a.probe_lo, a.probe_hi, a.probe_step}}};
  o.tsv_x = "delta";
  const ScalarFn f = parse_scalar_fn(a.fn);
  const Grid probe = Grid::uniform_step(a.probe_lo, a.probe_hi, a.probe_step);
  std::optional<MeasureSummary> mu;
  try {
    mu = second_derivative_summary(f);
  } catch (const UnsupportedError&) {
  }
  for (double d : deltas) {
    const double w = scalar_modulus(f, d, probe).value;
    const auto mod = modnep_upper_integral(f, d, probe);
    o.records.push_back(make_record("modnep", {{"fn", f.name()}, {"delta", d}}, w, mod.value,
                                    "lhs is the scalar modulus; rhs omits the unspecified constant"));
    try {
      const auto ost = concave_upper_integral(f, d);
      o.records.push_back(make_record("ostar", {{"fn", f.name()}, {"delta", d}, {"tail", ost.tail}}, w, ost.value,
                                      "lhs is the scalar modulus; rhs omits the unspecified constant"));
    } catch (const PreconditionError&) {
    }
    if (mu && std::abs(mu->total_mass()) <= 1e-12)
      o.records.push_back(make_record("fM", {{"fn", f.name()}, {"delta", d}}, w, fM_upper(*mu, d),
                                      "lhs is the scalar modulus; rhs omits the unspecified constant"));
  }
  return o;
}

struct EntropyArgs {
  std::string intervals;
  std::vector<double> points;
  std::vector<double> eps{0.1};
};

Outcome run_entropy(const Common&, const EntropyArgs& a) {
  Outcome o;
  o.params = {{"intervals", a.intervals}, {"points", a.points}, {"eps", a.eps}};
  o.tsv_x = "eps";
  const CompactSetDescr F(a.intervals.empty() ? std::vector<std::pair<double, double>>{} : parse_intervals(a.intervals),
                          a.points);
  for (double e : a.eps) {
    const auto r = epsilon_entropy(F, e);
    o.records.push_back(make_record("entropy",
                                    {{"eps", e}, {"K", r.K}, {"cardinality", r.cardinality}, {"net", r.net},
                                     {"packing_certifies", r.packing_certifies}},
                                    static_cast<double>(r.cardinality), static_cast<double>(r.packing.size()),
                                    "lhs is the net size, rhs a packing size (a lower bound on any net)"));
    if (r.packing.size() > r.cardinality) o.violations.push_back("packing larger than the net");
  }
  return o;
}

struct QcomArgs {
  std::string fn = "abs";
  std::vector<int> n{4, 8, 16, 32, 64};
};

Outcome run_qcom(const Common& c, const QcomArgs& a) {
  Outcome o;
  o.params = {{"fn", a.fn}, {"n", a.n}};
  o.tsv_x = "n";
  const ScalarFn f = parse_scalar_fn(a.fn);
  const CompactSetDescr F = CompactSetDescr::interval(-1.0, 1.0);
  o.records = parallel_map(
      a.n,
      [&](int n) {
        if (n < 2) throw PreconditionError("qcom: n must be >= 2");
        const auto g = Grid::uniform(-1.0, 1.0, static_cast<std::size_t>(n));
        const OperatorTriple t(HermitianMatrix::diagonal(g.reals()),
                               random_hermitian(n, -1.0, 1.0, c.seed + static_cast<std::uint64_t>(n)),
                               GeneralMatrix::Identity(n, n));
        return qcom_ratio(f, t, F);
      },
      c.jobs);
  return o;
}

struct LognArgs {
  std::vector<int> n{4, 8, 16, 32};
};

Outcome run_logn(const Common& c, const LognArgs& a) {
  Outcome o;
  o.params = {{"n", a.n}};
  o.tsv_x = "card";
  o.records = parallel_map(a.n, [&](int n) { return logn_sharp_constant(symmetric_integers(n), solver_options(c)); },
                           c.jobs);
  return o;
}

struct SamplingArgs {
  int N = 200;
  int points = 10;
  int n = 4;
};

Outcome run_sampling(const Common& c, const SamplingArgs& a) {
  Outcome o;
  o.params = {{"N", a.N}, {"points", a.points}, {"n", a.n}};
  if (a.n < 1 || a.points < 1) throw PreconditionError("sampling: n and points must be >= 1");
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> line(-20.0, 20.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> normal;
  const auto cosine = BandlimitedFn::cosine(1.0, 1.0);
  for (int i = 0; i < a.points; ++i) {
    const double z = line(rng);
    const auto r = reconstruct_line(cosine, z, a.N);
    o.records.push_back(make_record("line_reconstruction", {{"z", z}, {"N", a.N}}, std::abs(r.value - std::cos(z)),
                                    r.tail_bound, "rhs is the truncation tail bound"));
    o.records.push_back(make_record("line_kernel_mass", {{"x", z}}, line_kernel_mass(z), std::sqrt(2.0)));
  }
  std::vector<cplx> coeffs(static_cast<std::size_t>(2 * a.n + 1));
  for (auto& x : coeffs) x = cplx(normal(rng), normal(rng));
  const ScalarFn p = ScalarFn::trig(coeffs);
  const cplx tau = std::polar(1.0, angle(rng));
  for (int i = 0; i < a.points; ++i) {
    const cplx z = std::polar(1.0, angle(rng));
    o.records.push_back(make_record("circle_reconstruction", {{"arg", std::arg(z)}, {"n", a.n}},
                                    std::abs(reconstruct_circle(p, a.n, z, tau) - eval(p, z)), 1e-10));
    o.records.push_back(make_record("circle_kernel_mass", {{"arg", std::arg(z)}, {"n", a.n}},
                                    circle_kernel_mass(a.n, z, tau), std::sqrt(2.0)));
  }
  const auto tb = transfer_circle(CirclePolyKernel::divided_difference(ScalarFn::trig({0.0, 0.0, 0.0, 1.0, 1.0})), 2,
                                  1.0, 1.0, solver_options(c));
  o.records.push_back(make_record("circle_transfer", {{"n", 2}, {"grid_upper", tb.grid_upper}}, tb.lower, tb.upper,
                                  tb.caveat));
  const auto sb = commutator_sharpness_z(ScalarFn::abs(), -8, 8, 0.5, solver_options(c));
  o.records.push_back(make_record("sharpness_z", {{"fn", "abs"}, {"window", "-8..8"}}, sb.lower, sb.upper, sb.label));
  const auto prof = besN_profile(ScalarFn::lacunary({1, 1, 1, 1, 1, 1}, {1.0, 0.25, 0.0625, 1.0 / 64, 1.0 / 256, 1.0 / 1024}), 8);
  for (const auto& pp : prof)
    o.records.push_back(make_record("besN_profile", {{"n", pp.n}}, pp.partial_sum, 2.0, "rhs is the series limit"));
  for (const auto& r : o.records)
    if (r.name != "circle_transfer" && r.name != "sharpness_z" && r.name != "besN_profile" && r.lhs > r.rhs + 1e-8)
      o.violations.push_back(r.name + " above its bound");
  return o;
}

struct LacunaryArgs {
  std::vector<int> levels{1, 2, 3, 4};
  int trials = 8;
};

Outcome run_lacunary(const Common& c, const LacunaryArgs& a) {
  Outcome o;
  o.params = {{"levels", a.levels}, {"trials", a.trials}};
  o.tsv_x = "level";
  MultNormOptions opts = solver_options(c);
  opts.tol = std::max(c.tol, 1e-3);
  for (int m : a.levels) {
    const auto s = lacunary_search(m, a.trials, c.seed, c.jobs, opts);
    o.records.push_back(make_record("lacunary",
                                    {{"level", m}, {"best_seed", s.best.seed}, {"signs", s.best.signs},
                                     {"weights", s.best.weights}},
                                    s.best.value, std::sqrt(std::log(4.0 * std::ldexp(1.0, m))),
                                    "rhs is a reference profile, not a bound"));
  }
  return o;
}

Outcome run_report(const Common&, const std::vector<std::string>& inputs) {
  Outcome o;
  o.params = {{"inputs", inputs}};
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("report: cannot read " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw PreconditionError("report: " + path + " is not valid JSON");
    }
    const std::string cmd = j.value("command", "");
    for (const auto& rj : j.at("records")) {
      auto r = record_from_json(rj);
      if (!ratio_consistent(r)) o.violations.push_back("ratio mismatch in " + path + " record " + r.name);
      r.params["source"] = cmd;
      o.records.push_back(std::move(r));
    }
  }
  return o;
}

void emit(const Common& c, const std::string& command, const Outcome& o) {
  namespace fs = std::filesystem;
  json params = o.params;
  params["seed"] = c.seed;
  params["tol"] = c.tol;
  const fs::path dir(c.out);
  const std::string stem = command;
  if (c.format == "json" || c.format == "both")
    write_atomic(dir / (stem + ".json"), report_json(command, params, o.records, utc_timestamp()).dump(2) + "\n");
  if (c.format == "csv" || c.format == "both") write_atomic(dir / (stem + ".csv"), records_csv(o.records));
  if (!o.tsv_x.empty()) write_atomic(dir / (stem + ".tsv"), records_tsv(o.records, o.tsv_x));
  for (const auto& r : o.records)
    std::cout << r.name << '\t' << params_string(r.params) << '\t' << format_double(r.lhs) << '\t'
              << format_double(r.rhs) << '\t' << format_double(r.ratio) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oplab: operator moduli of continuity, Schur multipliers and sampling transfer"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--seed", common.seed, "Random seed")->capture_default_str();
  app.add_option("--tol", common.tol, "Solver tolerance")->capture_default_str()->check(CLI::Range(1e-8, 1e-2));
  app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_option("--format", common.format, "Output format")
      ->capture_default_str()
      ->check(CLI::IsMember({"json", "csv", "both"}));
  app.add_option("--jobs", common.jobs, "Parallel tasks")->capture_default_str()->check(CLI::Range(1, 256));

  DoiArgs doi;
  auto* c_doi = app.add_subcommand("doi-check", "Double-operator-integral identity residuals on random triples");
  c_doi->add_option("--n", doi.n)->capture_default_str();
  c_doi->add_option("--trials", doi.trials)->capture_default_str();
  c_doi->add_option("--fn", doi.fn, "Function descriptor or 'all'")->capture_default_str();
  c_doi->add_option("--box", doi.box, "Spectra lie in [-box, box]")->capture_default_str();

  MultArgs mult;
  auto* c_mult = app.add_subcommand("multnorm", "Certified Schur multiplier norm of a builtin matrix");
  c_mult->add_option("--builtin", mult.builtin)->required()->check(CLI::IsMember({"hilbert", "toral-lambda", "diffquot"}));
  c_mult->add_option("--n", mult.n, "Size parameter(s)")->delimiter(',')->capture_default_str();
  c_mult->add_option("--fn", mult.fn, "Function for diffquot")->capture_default_str();
  c_mult->add_option("--kernel", mult.kernel)->check(CLI::IsMember({"divided-difference", "sum-ratio"}))->capture_default_str();
  c_mult->add_option("--points", mult.points, "Explicit grid for diffquot")->delimiter(',');

  HatArgs hat;
  auto* c_hat = app.add_subcommand("hatnorm", "Bracket the Fourier-integral norm of f on an interval");
  c_hat->add_option("--fn", hat.fn)->capture_default_str();
  c_hat->add_option("--lo", hat.lo)->capture_default_str();
  c_hat->add_option("--hi", hat.hi)->capture_default_str();
  c_hat->add_option("--periodization", hat.periodization, "Also report the coefficient sum up to N")->capture_default_str();

  LowerArgs low;
  auto* c_low = app.add_subcommand("omega-lower", "Constructive commutator-modulus lower witness");
  c_low->add_option("--fn", low.fn)->capture_default_str();
  c_low->add_option("--a", low.a, "Grid extent when grids are not given")->capture_default_str();
  c_low->add_option("--delta", low.delta)->capture_default_str();
  c_low->add_option("--lambda", low.lambda)->delimiter(',');
  c_low->add_option("--mu", low.mu)->delimiter(',');
  c_low->add_flag("--dump", low.dump, "Write the witness matrices");

  UpperArgs up;
  auto* c_up = app.add_subcommand("omega-upper", "Net-based commutator-modulus upper bound");
  c_up->add_option("--fn", up.fn)->capture_default_str();
  c_up->add_option("--intervals", up.intervals, "lo,hi[;lo,hi...]")->capture_default_str();
  c_up->add_option("--points", up.points)->delimiter(',');
  c_up->add_option("--delta", up.deltas)->delimiter(',');
  c_up->add_option("--net-resolution", up.net_resolution, "Defaults to delta/2");

  KatoArgs kato;
  auto* c_kato = app.add_subcommand("kato", "Dyadic sweep of the absolute-value lower witness");
  c_kato->add_option("--a", kato.a)->capture_default_str();
  c_kato->add_option("--kmin", kato.kmin)->capture_default_str();
  c_kato->add_option("--kmax", kato.kmax)->capture_default_str();

  ConcaveArgs conc;
  auto* c_conc = app.add_subcommand("concave-bounds", "Integral upper bounds against the scalar modulus");
  c_conc->add_option("--fn", conc.fn)->capture_default_str();
  c_conc->add_option("--delta", conc.deltas)->delimiter(',');
  c_conc->add_option("--probe-lo", conc.probe_lo)->capture_default_str();
  c_conc->add_option("--probe-hi", conc.probe_hi)->capture_default_str();
  c_conc->add_option("--probe-step", conc.probe_step)->capture_default_str();

  EntropyArgs ent;
  auto* c_ent = app.add_subcommand("entropy", "Minimal eps-net of a compact set");
  c_ent->add_option("--intervals", ent.intervals, "lo,hi[;lo,hi...]");
  c_ent->add_option("--points", ent.points)->delimiter(',');
  c_ent->add_option("--eps", ent.eps)->delimiter(',');

  QcomArgs qc;
  auto* c_qc = app.add_subcommand("qcom", "Quasicommutator ratios against the entropy bound");
  c_qc->add_option("--fn", qc.fn)->capture_default_str();
  c_qc->add_option("--n", qc.n)->delimiter(',');

  LognArgs ln;
  auto* c_ln = app.add_subcommand("logn", "Absolute-value multiplier norm on symmetric integer grids");
  c_ln->add_option("--n", ln.n)->delimiter(',');

  SamplingArgs smp;
  auto* c_smp = app.add_subcommand("sampling", "Sampling identities and grid-to-continuum brackets");
  c_smp->add_option("--N", smp.N, "Line truncation half-width")->capture_default_str();
  c_smp->add_option("--points", smp.points)->capture_default_str();
  c_smp->add_option("--n", smp.n, "Circle degree")->capture_default_str();

  LacunaryArgs lac;
  auto* c_lac = app.add_subcommand("lacunary-search", "Seeded search over signed lacunary polynomials");
  c_lac->add_option("--levels", lac.levels)->delimiter(',');
  c_lac->add_option("--trials", lac.trials)->capture_default_str();

  std::vector<std::string> inputs;
  auto* c_rep = app.add_subcommand("report", "Merge earlier JSON outputs into one table");
  c_rep->add_option("inputs", inputs, "JSON files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Outcome o;
    json dump;
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (sub == c_doi) o = run_doi(common, doi);
    else if (sub == c_mult) o = run_multnorm(common, mult);
    else if (sub == c_hat) o = run_hatnorm(common, hat);
    else if (sub == c_low) o = run_omega_lower(common, low, dump);
    else if (sub == c_up) o = run_omega_upper(common, up);
    else if (sub == c_kato) o = run_kato(common, kato);
    else if (sub == c_conc) o = run_concave(common, conc);
    else if (sub == c_ent) o = run_entropy(common, ent);
    else if (sub == c_qc) o = run_qcom(common, qc);
    else if (sub == c_ln) o = run_logn(common, ln);
    else if (sub == c_smp) o = run_sampling(common, smp);
    else if (sub == c_lac) o = run_lacunary(common, lac);
    else o = run_report(common, inputs);
    emit(common, name, o);
    if (!dump.is_null()) write_atomic(std::filesystem::path(common.out) / (name + "-bundle.json"), dump.dump(2) + "\n");
    for (const auto& v : o.violations) std::cerr << "violation: " << v << '\n';
    return o.violations.empty() ? 0 : 1;
  } catch (const PreconditionError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const UnsupportedError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
