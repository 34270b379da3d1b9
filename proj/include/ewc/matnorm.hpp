// Weighted sup-norms, majorants, and Perron roots of nonnegative matrices.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ewc/types.hpp"

namespace ewc {

/// Entrywise absolute value |M|.
template <typename Derived>
auto nonneg_majorant(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs();
}

/// Metzler majorant: diagonal kept, off-diagonal entries replaced by |.|.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> metzler_majorant(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("metzler_majorant: matrix must be square");
  DenseMatrix<typename Derived::Scalar> r = m.cwiseAbs();
  r.diagonal() = m.diagonal();
  return r;
}

/// max_i |x_i| / eta_i.
inline double weighted_inf_norm(const Eigen::Ref<const Vector>& x, const PositiveWeight& w) {
  if (x.size() != w.size()) throw std::invalid_argument("weighted_inf_norm: dimension mismatch");
  return x.cwiseAbs().cwiseQuotient(w.vec()).maxCoeff();
}

/// Operator norm induced by the weighted sup-norm: max_i (|M| eta)_i / eta_i.
inline double induced_inf_norm(const Eigen::Ref<const Matrix>& m, const PositiveWeight& w) {
  if (m.rows() != m.cols()) throw std::invalid_argument("induced_inf_norm: matrix must be square");
  if (m.rows() != w.size()) throw std::invalid_argument("induced_inf_norm: dimension mismatch");
  return (m.cwiseAbs() * w.vec()).cwiseQuotient(w.vec()).maxCoeff();
}

struct PerronResult {
  double rho = 0.0;
  Vector v;             // nonnegative, sup-norm 1
  double residual = 0.0;  // max_i |(Nv)_i - rho v_i|
  bool converged = false;
  int iterations = 0;
};

/// Power iteration on a monotone, positively homogeneous map of nonnegative
/// vectors (a nonnegative matrix product, or worst-case row sums over a
/// Jacobian envelope). The iterate is regularized by +eps*v so reducible
/// inputs keep strictly positive iterates; the reported rho is the
/// Collatz-Wielandt upper quotient at the final vector, which upper-bounds
/// the true eigenvalue and is therefore always safe to certify against.
template <typename MapFn>
PerronResult perron_of_map(const MapFn& apply, Index n, double tol = 1e-12,
                           int max_iters = 10000, const Vector* warm_start = nullptr) {
  constexpr double kEps = 1e-12;
  PerronResult out;
  Vector v;
  if (warm_start != nullptr && warm_start->size() == n && warm_start->allFinite() &&
      warm_start->maxCoeff() > 0.0) {
    v = warm_start->cwiseAbs();
    v /= v.maxCoeff();
    v = v.cwiseMax(kEps);
  } else {
    v = Vector::Ones(n);
  }
  double rho_prev = std::numeric_limits<double>::quiet_NaN();
  for (int k = 1; k <= max_iters; ++k) {
    Vector w = apply(v);
    double rho = 0.0;
    for (Index i = 0; i < n; ++i)
      if (v[i] > 0.0) rho = std::max(rho, w[i] / v[i]);
    out.rho = rho;
    out.residual = (w - rho * v).cwiseAbs().maxCoeff();
    out.iterations = k;
    if (k > 1 && std::abs(rho - rho_prev) < tol &&
        out.residual <= 1e-8 * std::max(1.0, rho)) {
      out.v = v;
      out.converged = true;
      return out;
    }
    rho_prev = rho;
    v = w + kEps * v;
    double m = v.maxCoeff();
    if (m > 0.0)
      v /= m;
    else
      v = Vector::Ones(n);
  }
  out.v = v;
  return out;
}

/// Perron root and vector of a nonnegative square matrix.
inline PerronResult perron(const Matrix& n, double tol = 1e-12, int max_iters = 10000) {
  require_square(n, "perron input");
  require_finite(n, "perron input");
  if ((n.array() < 0.0).any())
    throw std::invalid_argument("perron: matrix must be entrywise nonnegative");
  return perron_of_map([&n](const Vector& v) -> Vector { return n * v; }, n.rows(), tol,
                       max_iters);
}

}  // namespace ewc
