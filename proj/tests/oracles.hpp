// Reference oracles for tests: dense eigensolves, norm maximizer search,
// finite differences, linear solves. Kept independent of the library kernels
// they are used to cross-check.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <random>
#include <vector>

#include "ewc/types.hpp"

namespace oracle {

using ewc::Index;
using ewc::Matrix;
using ewc::Vector;

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Vector random_positive_vector(std::mt19937_64& rng, Index n, double lo = 0.1,
                                     double hi = 3.0) {
  return random_vector(rng, n, lo, hi);
}

/// Largest eigenvalue modulus via the dense QR eigensolver.
inline double spectral_radius(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// True iff every eigenvalue with modulus >= 1 - tol is semi-simple: the rank
/// deficiency of A - lambda*I matches the algebraic multiplicity of the
/// eigenvalue cluster.
inline bool boundary_eigenvalues_semisimple(const Matrix& a, double tol = 1e-8) {
  Eigen::EigenSolver<Matrix> es(a);
  const auto& lambda = es.eigenvalues();
  const Index n = a.rows();
  std::vector<bool> visited(static_cast<size_t>(n), false);
  for (Index i = 0; i < n; ++i) {
    if (visited[static_cast<size_t>(i)] || std::abs(lambda[i]) < 1.0 - tol) continue;
    int algebraic = 0;
    for (Index j = 0; j < n; ++j) {
      if (std::abs(lambda[j] - lambda[i]) < 1e-6) {
        ++algebraic;
        visited[static_cast<size_t>(j)] = true;
      }
    }
    Eigen::MatrixXcd shifted = a.cast<std::complex<double>>();
    shifted.diagonal().array() -= lambda[i];
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(shifted);
    lu.setThreshold(1e-7);
    const int geometric = static_cast<int>(n - lu.rank());
    if (geometric != algebraic) return false;
  }
  return true;
}

/// Induced weighted sup-norm straight from its definition. The per-row
/// maximizer x_j = eta_j * sign(m_ij) attains the supremum exactly; random
/// vectors add independent lower-bound probes.
inline double induced_norm_by_search(const Matrix& m, const Vector& eta, std::mt19937_64& rng,
                                     int samples = 200) {
  const Index n = m.rows();
  auto ratio = [&](const Vector& x) {
    double nx = (x.cwiseQuotient(eta)).cwiseAbs().maxCoeff();
    if (nx == 0.0) return 0.0;
    double nmx = ((m * x).cwiseQuotient(eta)).cwiseAbs().maxCoeff();
    return nmx / nx;
  };
  double best = 0.0;
  for (Index i = 0; i < n; ++i) {
    Vector x(n);
    for (Index j = 0; j < n; ++j) x[j] = (m(i, j) >= 0.0 ? eta[j] : -eta[j]);
    best = std::max(best, ratio(x));
  }
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    Vector x(n);
    for (Index j = 0; j < n; ++j) x[j] = dist(rng);
    best = std::max(best, ratio(x));
  }
  return best;
}

/// Central finite-difference Jacobian of a vector map.
template <typename Fn>
Matrix fd_jacobian(const Fn& f, const Vector& x, double h = 1e-6) {
  const Index n = x.size();
  Vector fx = f(x);
  Matrix j(fx.size(), n);
  for (Index k = 0; k < n; ++k) {
    Vector xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    j.col(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

/// Fixed point of x -> Ax + offset via a dense solve of (I - A) x = offset.
inline Vector affine_fixed_point(const Matrix& a, const Vector& offset) {
  Matrix m = Matrix::Identity(a.rows(), a.cols()) - a;
  return m.fullPivLu().solve(offset);
}

/// Zero of x -> Mx - offset via a dense solve.
inline Vector linear_zero(const Matrix& m, const Vector& offset) {
  return m.fullPivLu().solve(offset);
}

}  // namespace oracle
