#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "oplab/errors.hpp"

namespace oplab {

using cplx = std::complex<double>;
using GeneralMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Self-adjoint matrix; construction symmetrizes, so the stored entries are exactly Hermitian.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  explicit HermitianMatrix(const GeneralMatrix& m) {
    if (m.rows() != m.cols()) throw PreconditionError("HermitianMatrix: matrix is not square");
    if (m.rows() < 1) throw PreconditionError("HermitianMatrix: dim must be >= 1");
    if (!m.allFinite()) throw PreconditionError("HermitianMatrix: non-finite entry");
    m_ = 0.5 * (m + m.adjoint());
    for (Eigen::Index i = 0; i < m_.rows(); ++i) m_(i, i) = m_(i, i).real();
  }

  static HermitianMatrix diagonal(const std::vector<double>& d) {
    GeneralMatrix m = GeneralMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
    return HermitianMatrix(m);
  }

  static HermitianMatrix identity(Eigen::Index n) { return HermitianMatrix(GeneralMatrix::Identity(n, n)); }

  Eigen::Index dim() const { return m_.rows(); }
  const GeneralMatrix& matrix() const { return m_; }
  cplx operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  GeneralMatrix m_;
};

struct SpectralDecomposition {
  RealVector eigenvalues;  // ascending
  GeneralMatrix basis;     // columns are eigenvectors

  GeneralMatrix reconstruct() const { return basis * eigenvalues.cast<cplx>().asDiagonal() * basis.adjoint(); }
};

inline constexpr int kJacobiMaxSweeps = 100;

inline double op_norm(const GeneralMatrix& m);

// Cyclic complex Jacobi. Each rotation first removes the phase of a(p,q), then applies
// the real symmetric Schur rotation.
inline SpectralDecomposition eig_hermitian(const HermitianMatrix& A, double tol = 1e-12) {
  if (!(tol > 0.0 && tol <= 1e-6)) throw PreconditionError("eig_hermitian: tol must lie in (0, 1e-6]");
  const Eigen::Index n = A.dim();
  GeneralMatrix a = A.matrix();
  GeneralMatrix v = GeneralMatrix::Identity(n, n);
  const double fro = a.norm();
  const double threshold = 1e-13 * fro;

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < j; ++i) s += std::norm(a(i, j));
    return std::sqrt(2.0 * s);
  };

  int sweeps = 0;
  while (fro > 0.0 && off_norm() > threshold) {
    if (sweeps == kJacobiMaxSweeps) {
      std::ostringstream msg;
      msg << "eig_hermitian: no convergence after " << sweeps << " sweeps (||A||_F = " << fro << ")";
      throw ConvergenceError(msg.str());
    }
    ++sweeps;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag <= 1e-300) continue;
        const cplx ph = apq / mag;
        const cplx phc = std::conj(ph);
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * mag);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]; A <- J* A J, V <- V J.
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx akp = a(k, p);
          const cplx akq = a(k, q) * phc;
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k) * ph;
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx vkp = v(k, p);
          const cplx vkq = v(k, q) * phc;
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i).real() < a(j, j).real(); });
  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.basis.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]).real();
    out.basis.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

// Largest singular value.
inline double op_norm(const GeneralMatrix& m) {
  if (m.size() == 0) return 0.0;
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if (!std::isfinite(scale)) throw PreconditionError("op_norm: non-finite entry");
  const GeneralMatrix s = m / scale;
  if (s.rows() == 1 || s.cols() == 1) return scale * s.norm();

  Eigen::BDCSVD<GeneralMatrix> svd(s);
  if (svd.info() != Eigen::Success) throw PreconditionError("op_norm: SVD failed");
  return scale * svd.singularValues()(0);
}

// f applied through the eigensystem; fn maps eigenvalue -> value.
template <class Fn>
HermitianMatrix apply_spectral(const SpectralDecomposition& d, Fn&& fn) {
  RealVector vals(d.eigenvalues.size());
  for (Eigen::Index k = 0; k < vals.size(); ++k) vals(k) = fn(d.eigenvalues(k));
  return HermitianMatrix(d.basis * vals.cast<cplx>().asDiagonal() * d.basis.adjoint());
}

// Haar unitary: QR of a complex Ginibre matrix with the phases of diag(R) removed.
template <class Rng>
GeneralMatrix random_unitary(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  GeneralMatrix z(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(i, j) = cplx(re, im);
    }
  Eigen::HouseholderQR<GeneralMatrix> qr(z);
  GeneralMatrix q = qr.householderQ();
  const GeneralMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0.0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

template <class Rng>
GeneralMatrix random_general(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  GeneralMatrix z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(i, j) = cplx(re, im);
    }
  return z;
}

inline HermitianMatrix random_hermitian(Eigen::Index dim, double lo, double hi, std::uint64_t seed) {
  if (dim < 1) throw PreconditionError("random_hermitian: dim must be >= 1");
  if (!(lo <= hi)) throw PreconditionError("random_hermitian: empty spectrum box");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  std::vector<double> spec(static_cast<std::size_t>(dim));
  for (auto& s : spec) s = unif(rng);
  const GeneralMatrix u = random_unitary(dim, rng);
  GeneralMatrix m = u * RealVector::Map(spec.data(), dim).cast<cplx>().asDiagonal() * u.adjoint();
  return HermitianMatrix(m);
}

inline nlohmann::json matrix_to_json(const GeneralMatrix& m) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      re.push_back(m(i, j).real());
      im.push_back(m(i, j).imag());
    }
  nlohmann::json j{{"re", re}, {"im", im}};
  if (m.rows() == m.cols())
    j["dim"] = m.rows();
  else {
    j["rows"] = m.rows();
    j["cols"] = m.cols();
  }
  return j;
}

inline GeneralMatrix matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = j.contains("dim") ? j.at("dim").get<Eigen::Index>() : j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.contains("dim") ? rows : j.at("cols").get<Eigen::Index>();
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (re.size() != static_cast<std::size_t>(rows * cols) || im.size() != re.size())
    throw PreconditionError("matrix_from_json: entry count does not match shape");
  GeneralMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) {
      const auto k = static_cast<std::size_t>(i * cols + j2);
      m(i, j2) = cplx(re[k].get<double>(), im[k].get<double>());
    }
  return m;
}

inline nlohmann::json to_json(const HermitianMatrix& a) { return matrix_to_json(a.matrix()); }
inline HermitianMatrix hermitian_from_json(const nlohmann::json& j) { return HermitianMatrix(matrix_from_json(j)); }

}  // namespace oplab
