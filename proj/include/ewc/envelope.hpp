// Finite descriptions of Jacobian sets and their exact row-wise worst-case
// functionals.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ewc/types.hpp"

namespace ewc {

/// Set of Jacobians an operator can attain, in one of two finite forms:
///
///  - VertexList: every Jacobian row lies in the row-wise convex hull of the
///    listed matrices. Row functionals below are exact because each is convex
///    in a row shared across the hull.
///  - EntryInterval: every entry ranges independently over [lower, upper].
///    With row coupling enabled, only the off-diagonal entries are free and
///    each diagonal entry is tied to its row: J_ii = coupling - sum_{j != i}
///    J_ij. That is the shape of step maps x + theta(T(x) - x) built from
///    per-edge slopes, where the functionals below stay exact.
class JacobianEnvelope {
 public:
  enum class Kind { VertexList, EntryInterval };

  static JacobianEnvelope from_vertices(std::vector<Matrix> vertices) {
    if (vertices.empty())
      throw std::invalid_argument("envelope needs at least one vertex");
    const Index n = vertices.front().rows();
    for (const Matrix& v : vertices) {
      require_square(v, "envelope vertex");
      require_finite(v, "envelope vertex");
      if (v.rows() != n) throw std::invalid_argument("envelope vertices differ in size");
    }
    JacobianEnvelope env;
    env.kind_ = Kind::VertexList;
    env.n_ = n;
    env.vertices_ = std::move(vertices);
    return env;
  }

  static JacobianEnvelope from_intervals(Matrix lower, Matrix upper) {
    JacobianEnvelope env = interval_base(std::move(lower), std::move(upper));
    return env;
  }

  /// Off-diagonal entries range over [lower, upper]; each diagonal entry is
  /// coupling - (row sum of off-diagonal entries). Diagonals of the bound
  /// matrices are ignored.
  static JacobianEnvelope coupled_rows(Matrix lower, Matrix upper, double coupling) {
    JacobianEnvelope env = interval_base(std::move(lower), std::move(upper));
    env.lower_.diagonal().setZero();
    env.upper_.diagonal().setZero();
    env.coupled_ = true;
    env.coupling_ = coupling;
    return env;
  }

  Kind kind() const { return kind_; }
  Index dim() const { return n_; }
  bool coupled() const { return coupled_; }
  double coupling() const { return coupling_; }

  const std::vector<Matrix>& vertices() const {
    if (kind_ != Kind::VertexList) throw std::logic_error("envelope has no vertices");
    return vertices_;
  }
  const Matrix& lower() const {
    if (kind_ != Kind::EntryInterval) throw std::logic_error("envelope has no interval bounds");
    return lower_;
  }
  const Matrix& upper() const {
    if (kind_ != Kind::EntryInterval) throw std::logic_error("envelope has no interval bounds");
    return upper_;
  }

 private:
  static JacobianEnvelope interval_base(Matrix lower, Matrix upper) {
    require_square(lower, "envelope lower bound");
    require_finite(lower, "envelope lower bound");
    require_finite(upper, "envelope upper bound");
    if (lower.rows() != upper.rows() || lower.cols() != upper.cols())
      throw std::invalid_argument("envelope bounds differ in size");
    if ((lower.array() > upper.array()).any())
      throw std::invalid_argument("envelope lower bound exceeds upper bound");
    JacobianEnvelope env;
    env.kind_ = Kind::EntryInterval;
    env.n_ = lower.rows();
    env.lower_ = std::move(lower);
    env.upper_ = std::move(upper);
    return env;
  }

  Kind kind_ = Kind::VertexList;
  Index n_ = 0;
  std::vector<Matrix> vertices_;
  Matrix lower_, upper_;
  bool coupled_ = false;
  double coupling_ = 0.0;
};

namespace detail {

inline void require_weight_dim(const JacobianEnvelope& env, const Vector& eta) {
  if (eta.size() != env.dim())
    throw std::invalid_argument("weight dimension does not match envelope");
}

}  // namespace detail

/// Envelope of scale*J + shift*I as J runs over env.
inline JacobianEnvelope transform(const JacobianEnvelope& env, double scale, double shift) {
  if (env.kind() == JacobianEnvelope::Kind::VertexList) {
    std::vector<Matrix> vs;
    vs.reserve(env.vertices().size());
    for (const Matrix& v : env.vertices()) {
      Matrix t = scale * v;
      t.diagonal().array() += shift;
      vs.push_back(std::move(t));
    }
    return JacobianEnvelope::from_vertices(std::move(vs));
  }
  Matrix lo = scale * env.lower();
  Matrix hi = scale * env.upper();
  if (scale < 0.0) lo.swap(hi);
  if (env.coupled())
    return JacobianEnvelope::coupled_rows(std::move(lo), std::move(hi),
                                          scale * env.coupling() + shift);
  lo.diagonal().array() += shift;
  hi.diagonal().array() += shift;
  return JacobianEnvelope::from_intervals(std::move(lo), std::move(hi));
}

/// Entrywise infimum over the envelope.
inline Matrix entry_lower(const JacobianEnvelope& env) {
  if (env.kind() == JacobianEnvelope::Kind::VertexList) {
    Matrix lo = env.vertices().front();
    for (const Matrix& v : env.vertices()) lo = lo.cwiseMin(v);
    return lo;
  }
  Matrix lo = env.lower();
  if (env.coupled()) {
    for (Index i = 0; i < env.dim(); ++i)
      lo(i, i) = env.coupling() - env.upper().row(i).sum();
  }
  return lo;
}

/// Entrywise supremum over the envelope.
inline Matrix entry_upper(const JacobianEnvelope& env) {
  if (env.kind() == JacobianEnvelope::Kind::VertexList) {
    Matrix hi = env.vertices().front();
    for (const Matrix& v : env.vertices()) hi = hi.cwiseMax(v);
    return hi;
  }
  Matrix hi = env.upper();
  if (env.coupled()) {
    for (Index i = 0; i < env.dim(); ++i)
      hi(i, i) = env.coupling() - env.lower().row(i).sum();
  }
  return hi;
}

/// sup over the envelope of max_i (-J)_ii.
inline double diag_lower(const JacobianEnvelope& env) {
  if (env.kind() == JacobianEnvelope::Kind::VertexList) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const Matrix& v : env.vertices())
      worst = std::max(worst, (-v.diagonal()).maxCoeff());
    return worst;
  }
  return (-entry_lower(env).diagonal()).maxCoeff();
}

/// Row-wise sup over the envelope of (|bI + J| eta)_i.
inline Vector worst_abs_row_sums(const JacobianEnvelope& env, double b, const Vector& eta) {
  detail::require_weight_dim(env, eta);
  if (b < 0.0) throw std::invalid_argument("shift b must be nonnegative");
  const Index n = env.dim();
  Vector out(n);
  if (env.kind() == JacobianEnvelope::Kind::VertexList) {
    out.setConstant(-std::numeric_limits<double>::infinity());
    for (const Matrix& v : env.vertices()) {
      Matrix shifted = v;
      shifted.diagonal().array() += b;
      out = out.cwiseMax(shifted.cwiseAbs() * eta);
    }
    return out;
  }
  const Matrix& lo = env.lower();
  const Matrix& hi = env.upper();
  if (!env.coupled()) {
    for (Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Index j = 0; j < n; ++j) {
        double l = lo(i, j) + (i == j ? b : 0.0);
        double u = hi(i, j) + (i == j ? b : 0.0);
        acc += std::max(std::abs(l), std::abs(u)) * eta[j];
      }
      out[i] = acc;
    }
    return out;
  }
  // Coupled rows: |b + coupling - sum_j s_j| eta_i + sum_j |s_j| eta_j with
  // each s_j free in [lo_ij, hi_ij]. Splitting the leading absolute value
  // into its two signed branches makes every edge term convex on its own
  // interval, so each maximizes at an endpoint.
  const double head = b + env.coupling();
  for (Index i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (double sigma : {1.0, -1.0}) {
      double acc = sigma * head * eta[i];
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        double at_lo = -sigma * lo(i, j) * eta[i] + std::abs(lo(i, j)) * eta[j];
        double at_hi = -sigma * hi(i, j) * eta[i] + std::abs(hi(i, j)) * eta[j];
        acc += std::max(at_lo, at_hi);
      }
      best = std::max(best, acc);
    }
    out[i] = best;
  }
  return out;
}

/// Row-wise sup over the envelope of (metzler_majorant(J) eta)_i: the signed
/// diagonal entry plus absolute off-diagonal entries.
inline Vector worst_metzler_row_sums(const JacobianEnvelope& env, const Vector& eta) {
  detail::require_weight_dim(env, eta);
  const Index n = env.dim();
  Vector out(n);
  if (env.kind() == JacobianEnvelope::Kind::VertexList) {
    out.setConstant(-std::numeric_limits<double>::infinity());
    for (const Matrix& v : env.vertices()) {
      Matrix m = v.cwiseAbs();
      m.diagonal() = v.diagonal();
      out = out.cwiseMax(m * eta);
    }
    return out;
  }
  const Matrix& lo = env.lower();
  const Matrix& hi = env.upper();
  if (!env.coupled()) {
    for (Index i = 0; i < n; ++i) {
      double acc = hi(i, i) * eta[i];
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        acc += std::max(std::abs(lo(i, j)), std::abs(hi(i, j))) * eta[j];
      }
      out[i] = acc;
    }
    return out;
  }
  for (Index i = 0; i < n; ++i) {
    double acc = env.coupling() * eta[i];
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double at_lo = -lo(i, j) * eta[i] + std::abs(lo(i, j)) * eta[j];
      double at_hi = -hi(i, j) * eta[i] + std::abs(hi(i, j)) * eta[j];
      acc += std::max(at_lo, at_hi);
    }
    out[i] = acc;
  }
  return out;
}

/// Row-wise sup over the envelope of (J eta)_i, no absolute values.
inline Vector worst_signed_row_sums(const JacobianEnvelope& env, const Vector& eta) {
  detail::require_weight_dim(env, eta);
  const Index n = env.dim();
  Vector out(n);
  if (env.kind() == JacobianEnvelope::Kind::VertexList) {
    out.setConstant(-std::numeric_limits<double>::infinity());
    for (const Matrix& v : env.vertices()) out = out.cwiseMax(v * eta);
    return out;
  }
  const Matrix& lo = env.lower();
  const Matrix& hi = env.upper();
  if (!env.coupled()) {
    for (Index i = 0; i < n; ++i) {
      double acc = hi(i, i) * eta[i];
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        acc += std::max(lo(i, j) * eta[j], hi(i, j) * eta[j]);
      }
      out[i] = acc;
    }
    return out;
  }
  for (Index i = 0; i < n; ++i) {
    double acc = env.coupling() * eta[i];
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double gap = eta[j] - eta[i];
      acc += std::max(lo(i, j) * gap, hi(i, j) * gap);
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace ewc
