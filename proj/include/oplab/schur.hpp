#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "oplab/errors.hpp"
#include "oplab/scalar_fn.hpp"
#include "oplab/spectral.hpp"

namespace oplab {

struct Provenance {
  std::string fn;
  std::optional<Grid> rows;
  std::optional<Grid> cols;
};

struct MultiplierProblem {
  GeneralMatrix matrix;
  std::string label;
  std::optional<Provenance> provenance;
};

struct LowerWitness {
  double value = 0.0;
  GeneralMatrix witness;  // B with op_norm(B) = 1
};

// M = X * Y^*, i.e. M_ij = <row_i, col_j> with rows of X and Y as the vectors.
struct UpperFactorization {
  double value = 0.0;
  GeneralMatrix row_vectors;
  GeneralMatrix col_vectors;
};

struct MultiplierCertificate {
  std::string label;
  LowerWitness lower;
  UpperFactorization upper;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
  double tol = 0.0;
};

struct MultNormOptions {
  double tol = 1e-4;
  int max_iterations = 20000;
  Eigen::Index cap = 256;
  std::uint64_t seed = 0;
};

inline GeneralMatrix schur_product(const GeneralMatrix& a, const GeneralMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw PreconditionError("schur_product: shape mismatch");
  return a.cwiseProduct(b);
}

namespace detail {

// Partial eigen/singular system N = W diag(s) Z^* with s >= 0.
struct Factor {
  Eigen::MatrixXcd w;
  Eigen::VectorXd s;
  Eigen::MatrixXcd z;
};

inline Factor factor_general(const Eigen::MatrixXcd& n) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(n, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw ConvergenceError("mult_norm: SVD failed");
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

// Hermitian N = V diag(lam) V^* gives W = V, s = |lam|, Z = V sign(lam).
inline Factor factor_hermitian(const Eigen::MatrixXcd& n) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(n);
  if (es.info() != Eigen::Success) throw ConvergenceError("mult_norm: eigensolver failed");
  Factor f{es.eigenvectors(), es.eigenvalues().cwiseAbs(), es.eigenvectors()};
  for (Eigen::Index k = 0; k < f.s.size(); ++k)
    if (es.eigenvalues()(k) < 0.0) f.z.col(k) = -f.z.col(k);
  return f;
}

inline bool is_hermitian(const Eigen::MatrixXcd& m) {
  return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-14 * m.cwiseAbs().maxCoeff();
}

struct SolverState {
  Eigen::VectorXd p, q;
  Factor f;
};

}  // namespace detail

// Two-sided bracket on the Schur multiplier norm of M via its gamma_2 factorization norm,
//   ||M||_mult = max_{p, q probability vectors} || D_p^{1/2} M D_q^{1/2} ||_trace.
// Multiplicative fixed-point updates on (p, q); every iterate yields a witness (lower) and a
// factorization (upper), and the best of each is kept.
inline MultiplierCertificate mult_norm(const MultiplierProblem& problem, const MultNormOptions& opts = {}) {
  const GeneralMatrix& m_in = problem.matrix;
  const Eigen::Index m = m_in.rows();
  const Eigen::Index n = m_in.cols();
  if (m < 1 || n < 1) throw PreconditionError("mult_norm: empty matrix");
  if (m > opts.cap || n > opts.cap) {
    std::ostringstream msg;
    msg << "mult_norm: " << m << "x" << n << " exceeds solver cap " << opts.cap;
    throw PreconditionError(msg.str());
  }
  if (!(opts.tol >= 1e-8 && opts.tol <= 1e-2)) throw PreconditionError("mult_norm: tol must lie in [1e-8, 1e-2]");
  if (!m_in.allFinite()) throw PreconditionError("mult_norm: non-finite entry");

  MultiplierCertificate cert;
  cert.label = problem.label;
  cert.tol = opts.tol;
  const double scale = m_in.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    cert.lower.witness = GeneralMatrix::Zero(m, n);
    cert.lower.witness(0, 0) = 1.0;
    cert.upper.row_vectors = GeneralMatrix::Zero(m, 1);
    cert.upper.col_vectors = GeneralMatrix::Zero(n, 1);
    cert.converged = true;
    return cert;
  }

  // Zero rows/columns do not affect the norm and would drive their weights to zero.
  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index i = 0; i < m; ++i)
    if (m_in.row(i).cwiseAbs().maxCoeff() > 0.0) rows.push_back(i);
  for (Eigen::Index j = 0; j < n; ++j)
    if (m_in.col(j).cwiseAbs().maxCoeff() > 0.0) cols.push_back(j);
  const auto mr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(cols.size());
  GeneralMatrix mc(mr, nc);
  for (Eigen::Index i = 0; i < mr; ++i)
    for (Eigen::Index j = 0; j < nc; ++j) mc(i, j) = m_in(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]) / scale;

  // Hermitian (or skew-Hermitian, after multiplying by i) input: the optimum has p = q.
  cplx rot = 1.0;
  bool symmetric = rows == cols && detail::is_hermitian(mc);
  if (!symmetric && rows == cols && detail::is_hermitian(cplx(0.0, 1.0) * mc)) {
    rot = cplx(0.0, 1.0);
    symmetric = true;
  }
  const GeneralMatrix work = rot * mc;

  Eigen::VectorXd p = Eigen::VectorXd::Constant(mr, 1.0 / static_cast<double>(mr));
  Eigen::VectorXd q = Eigen::VectorXd::Constant(nc, 1.0 / static_cast<double>(nc));
  const double p_floor = 1e-10 / static_cast<double>(mr);
  const double q_floor = 1e-10 / static_cast<double>(nc);

  double best_lo = -1.0;
  double best_up = std::numeric_limits<double>::infinity();
  detail::SolverState lo_state, up_state;
  double omega = 2.0;
  double prev_lo = 0.0;
  int it = 0;
  bool converged = false;

  auto renormalize = [](Eigen::VectorXd& v, double floor) {
    v /= v.sum();
    v = v.cwiseMax(floor);
    v /= v.sum();
  };

  for (; it <= opts.max_iterations; ++it) {
    const Eigen::VectorXd sp = p.cwiseSqrt();
    const Eigen::VectorXd sq = q.cwiseSqrt();
    const GeneralMatrix nmat = sp.asDiagonal() * work * sq.asDiagonal();
    detail::Factor f = symmetric ? detail::factor_hermitian(nmat) : detail::factor_general(nmat);
    const double lo = f.s.sum();
    const Eigen::VectorXd a = f.w.cwiseAbs2() * f.s;
    const Eigen::VectorXd b = f.z.cwiseAbs2() * f.s;
    const Eigen::VectorXd xr = a.cwiseQuotient(p);
    const Eigen::VectorXd yr = b.cwiseQuotient(q);
    const double up = std::sqrt(xr.maxCoeff() * yr.maxCoeff());
    if (lo > best_lo) {
      best_lo = lo;
      lo_state = {p, q, f};
    }
    if (up < best_up) {
      best_up = up;
      up_state = {p, q, f};
    }
    if (best_up - best_lo <= opts.tol * std::max(1.0 / scale, best_up)) {
      converged = true;
      break;
    }
    if (it == opts.max_iterations) break;
    // Over-relaxed steps can overshoot; fall back towards the plain fixed point.
    if (lo < prev_lo * (1.0 - 1e-12)) omega = std::max(1.0, 0.7 * omega);
    prev_lo = lo;
    for (Eigen::Index i = 0; i < mr; ++i) p(i) *= std::pow(xr(i) / lo, omega);
    renormalize(p, p_floor);
    if (symmetric) {
      q = p;
    } else {
      for (Eigen::Index j = 0; j < nc; ++j) q(j) *= std::pow(yr(j) / lo, omega);
      renormalize(q, q_floor);
    }
  }

  // Lower witness B = conj(W Z^*) embedded in the full shape; op_norm(B) = 1.
  {
    const auto& [lp, lq, f] = lo_state;
    const GeneralMatrix bc = (f.w * f.z.adjoint()).conjugate();
    GeneralMatrix bw = GeneralMatrix::Zero(m, n);
    for (Eigen::Index i = 0; i < mr; ++i)
      for (Eigen::Index j = 0; j < nc; ++j) bw(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]) = bc(i, j);
    GeneralMatrix u = GeneralMatrix::Zero(m, 1), v = GeneralMatrix::Zero(n, 1);
    for (Eigen::Index i = 0; i < mr; ++i) u(rows[static_cast<std::size_t>(i)], 0) = std::sqrt(lp(i));
    for (Eigen::Index j = 0; j < nc; ++j) v(cols[static_cast<std::size_t>(j)], 0) = std::sqrt(lq(j));
    const cplx val = (u.transpose() * m_in.cwiseProduct(bw) * v)(0, 0);
    cert.lower.value = std::abs(val);
    cert.lower.witness = std::move(bw);
  }
  // Upper factorization X = D_p^{-1/2} W S^{1/2}, Y = D_q^{-1/2} Z S^{1/2}, balanced. Weights near
  // the floor amplify eigensolver round-off by p^{-1/2}, so raise the floor until X Y^* reproduces M.
  {
    const auto& [up_p, up_q, f0] = up_state;
    const double res_tol = 1e-10 * std::max(1.0, scale);
    double best_val = std::numeric_limits<double>::infinity();
    double best_res = std::numeric_limits<double>::infinity();
    GeneralMatrix best_x, best_y;
    for (double lift = 1.0; lift <= 1e6; lift *= 10.0) {
      Eigen::VectorXd pp = up_p, qq = up_q;
      detail::Factor f = f0;
      if (lift > 1.0) {
        renormalize(pp, lift * p_floor);
        if (symmetric) {
          qq = pp;
        } else {
          renormalize(qq, lift * q_floor);
        }
        const GeneralMatrix nmat = pp.cwiseSqrt().asDiagonal() * work * qq.cwiseSqrt().asDiagonal();
        f = symmetric ? detail::factor_hermitian(nmat) : detail::factor_general(nmat);
      }
      const Eigen::VectorXd rs = f.s.cwiseSqrt();
      GeneralMatrix x = pp.cwiseSqrt().cwiseInverse().asDiagonal() * f.w * rs.asDiagonal();
      GeneralMatrix y = qq.cwiseSqrt().cwiseInverse().asDiagonal() * f.z * rs.asDiagonal();
      x *= std::sqrt(scale);
      y *= std::sqrt(scale) * rot;  // rot * M = X Y^*  implies  M = X (rot Y)^*
      const double cx = x.rowwise().norm().maxCoeff();
      const double cy = y.rowwise().norm().maxCoeff();
      if (cx > 0.0 && cy > 0.0) {
        x *= std::sqrt(cy / cx);
        y *= std::sqrt(cx / cy);
      }
      const double res = (x * y.adjoint() - mc * scale).cwiseAbs().maxCoeff();
      const double val = x.rowwise().norm().maxCoeff() * y.rowwise().norm().maxCoeff();
      const bool better = res <= res_tol ? (best_res > res_tol || val < best_val) : (best_res > res_tol && res < best_res);
      if (better) {
        best_val = val;
        best_res = res;
        best_x = std::move(x);
        best_y = std::move(y);
      }
    }
    GeneralMatrix xf = GeneralMatrix::Zero(m, best_x.cols()), yf = GeneralMatrix::Zero(n, best_y.cols());
    for (Eigen::Index i = 0; i < mr; ++i) xf.row(rows[static_cast<std::size_t>(i)]) = best_x.row(i);
    for (Eigen::Index j = 0; j < nc; ++j) yf.row(cols[static_cast<std::size_t>(j)]) = best_y.row(j);
    cert.upper.value = xf.rowwise().norm().maxCoeff() * yf.rowwise().norm().maxCoeff();
    cert.upper.row_vectors = std::move(xf);
    cert.upper.col_vectors = std::move(yf);
  }
  cert.gap = cert.upper.value - cert.lower.value;
  cert.iterations = it;
  cert.converged = converged && cert.gap <= opts.tol * std::max(1.0, cert.upper.value);
  return cert;
}

struct CertificateCheck {
  double witness_ratio = 0.0;    // op_norm(M * B) / op_norm(B)
  double factor_residual = 0.0;  // max |<row_i, col_j> - M_ij|
  double factor_value = 0.0;     // max ||row_i|| * max ||col_j||
  bool lower_ok = false;
  bool upper_ok = false;
  bool order_ok = false;
  bool ok() const { return lower_ok && upper_ok && order_ok; }
};

// Re-verifies both sides of a certificate from the raw matrix, independent of the solver.
inline CertificateCheck verify_certificate(const GeneralMatrix& m, const MultiplierCertificate& c) {
  CertificateCheck r;
  const double bn = op_norm(c.lower.witness);
  r.witness_ratio = bn > 0.0 ? op_norm(m.cwiseProduct(c.lower.witness)) / bn : 0.0;
  r.lower_ok = bn > 0.0 && op_norm(m.cwiseProduct(c.lower.witness)) >= c.lower.value * bn - 1e-8;
  const GeneralMatrix prod = c.upper.row_vectors * c.upper.col_vectors.adjoint();
  r.factor_residual = (prod - m).cwiseAbs().maxCoeff();
  r.factor_value = c.upper.row_vectors.rowwise().norm().maxCoeff() * c.upper.col_vectors.rowwise().norm().maxCoeff();
  const double mag = std::max(1.0, m.cwiseAbs().maxCoeff());
  r.upper_ok = r.factor_residual <= 1e-8 * mag && r.factor_value <= c.upper.value + 1e-8 * mag;
  r.order_ok = c.lower.value <= c.upper.value + 2.0 * c.tol;
  return r;
}

inline nlohmann::json to_json(const MultiplierCertificate& c) {
  return {{"label", c.label},
          {"lower", c.lower.value},
          {"upper", c.upper.value},
          {"gap", c.gap},
          {"iterations", c.iterations},
          {"converged", c.converged}};
}

struct LowerSearchResult {
  double value = 0.0;
  GeneralMatrix witness;
};

namespace detail {

inline double witness_ratio(const GeneralMatrix& m, const GeneralMatrix& b) {
  const double bn = op_norm(b);
  return bn > 0.0 ? op_norm(m.cwiseProduct(b)) / bn : 0.0;
}

}  // namespace detail

// Alternating maximization of op_norm(M*B)/op_norm(B): top singular pair (x, y) of M*B, then the
// B of norm one maximizing Re x^*(M*B)y, which is conj(U V^*) for G_ij = conj(x_i) M_ij y_j = U S V^*.
inline LowerSearchResult mult_lower_search(const MultiplierProblem& problem, int trials, std::uint64_t seed,
                                           const std::vector<GeneralMatrix>& previous = {}) {
  if (trials < 1) throw PreconditionError("mult_lower_search: trials must be >= 1");
  const GeneralMatrix& mat = problem.matrix;
  const Eigen::Index m = mat.rows();
  const Eigen::Index n = mat.cols();
  std::mt19937_64 rng(seed);

  std::vector<GeneralMatrix> starts;
  starts.push_back(GeneralMatrix::Ones(m, n));
  GeneralMatrix cauchy(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cauchy(i, j) = 1.0 / (static_cast<double>(i - j) + 0.5);
  starts.push_back(cauchy);
  for (const auto& b : previous)
    if (b.rows() == m && b.cols() == n) starts.push_back(b);
  while (static_cast<int>(starts.size()) < trials) starts.push_back(random_general(m, n, rng));

  LowerSearchResult best{-1.0, GeneralMatrix::Ones(m, n)};
  for (auto b : starts) {
    double prev = -1.0;
    for (int step = 0; step < 50; ++step) {
      const double val = detail::witness_ratio(mat, b);
      if (val > best.value) best = {val, b / op_norm(b)};
      if (val <= prev * (1.0 + 1e-10)) break;
      prev = val;
      Eigen::BDCSVD<GeneralMatrix> top(mat.cwiseProduct(b), Eigen::ComputeThinU | Eigen::ComputeThinV);
      const ComplexVector x = top.matrixU().col(0);
      const ComplexVector y = top.matrixV().col(0);
      const GeneralMatrix g = x.conjugate().asDiagonal() * mat * y.asDiagonal();
      Eigen::BDCSVD<GeneralMatrix> gs(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
      b = (gs.matrixU() * gs.matrixV().adjoint()).conjugate();
    }
  }
  if (best.value < 0.0) best.value = 0.0;
  return best;
}

// ---------------------------------------------------------------- builtin problems

// H(j, k) = 1/(j - k) on indices -n..n, zero diagonal.
inline MultiplierProblem hilbert_multiplier(int n) {
  if (n < 0) throw PreconditionError("hilbert_multiplier: n must be >= 0");
  const Eigen::Index d = 2 * n + 1;
  GeneralMatrix h = GeneralMatrix::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = 0; k < d; ++k)
      if (j != k) h(j, k) = 1.0 / static_cast<double>(j - k);
  return {h, "hilbert n=" + std::to_string(n), std::nullopt};
}

// lambda(zeta - xi) over T_n, lambda(0) = 0 and lambda(z) = 1/z.
inline MultiplierProblem toral_lambda(int n) {
  if (n < 1) throw PreconditionError("toral_lambda: n must be >= 1");
  const Grid t = Grid::roots_of_unity(static_cast<std::size_t>(n));
  const auto& z = t.circle_points();
  GeneralMatrix l = GeneralMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) l(i, j) = 1.0 / (z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(j)]);
  return {l, "toral-lambda n=" + std::to_string(n), Provenance{"lambda", t, t}};
}

// Exact value of the toral lambda multiplier norm: n/4 for even n, (n^2 - 1)/(4n) for odd n.
inline double toral_lambda_exact(int n) {
  return n % 2 == 0 ? n / 4.0 : (static_cast<double>(n) * n - 1.0) / (4.0 * n);
}

inline MultiplierProblem difference_quotient_problem(const ScalarFn& f, const Grid& X, const Grid& Y) {
  auto d = divided_diff(f, X, Y, DiagonalRule::Zero);
  return {std::move(d.entries), "Delta0 " + f.name(), Provenance{f.name(), X, Y}};
}

// (x - y)/(x + y) on positive grids.
inline MultiplierProblem sum_ratio_problem(const Grid& X, const Grid& Y) {
  const auto& xs = X.reals();
  const auto& ys = Y.reals();
  GeneralMatrix k(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      if (xs[i] + ys[j] == 0.0) {
        std::ostringstream msg;
        msg << "sum_ratio_problem: x + y = 0 at (" << xs[i] << ", " << ys[j] << ")";
        throw DomainError(msg.str());
      }
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (xs[i] - ys[j]) / (xs[i] + ys[j]);
    }
  return {k, "(x-y)/(x+y)", Provenance{"sum-ratio", X, Y}};
}

}  // namespace oplab
