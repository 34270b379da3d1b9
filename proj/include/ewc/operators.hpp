// Operator models: affine maps and diagonal nonlinearities composed with
// affine maps, plus the scalar function library they and the consensus
// module share.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ewc/envelope.hpp"
#include "ewc/types.hpp"

namespace ewc {

/// max(alpha*x, x) with alpha in [0,1].
inline double leaky_relu(double x, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("leaky_relu: alpha must lie in [0,1]");
  return std::max(alpha * x, x);
}

/// Closed slope interval [d1, d2] containing every difference quotient of a
/// scalar function.
struct SectorBounds {
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Piecewise-linear scalar maps used both as activations and as edge rules.
/// All kinds fix zero except general Linear/PiecewiseLinear, which may not.
class ScalarFunction {
 public:
  enum class Kind { Identity, Linear, LeakyRelu, MinLeakyRelu, PiecewiseLinear };

  static ScalarFunction identity() { return ScalarFunction(Kind::Identity, 1.0); }

  static ScalarFunction linear(double slope) {
    if (!std::isfinite(slope)) throw std::invalid_argument("linear slope must be finite");
    return ScalarFunction(Kind::Linear, slope);
  }

  static ScalarFunction make_leaky_relu(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("leaky_relu alpha must lie in [0,1]");
    return ScalarFunction(Kind::LeakyRelu, alpha);
  }

  /// min(alpha*x, x): the reflection of LReLU, slope alpha on the positive
  /// side.
  static ScalarFunction make_min_leaky_relu(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("min_leaky_relu alpha must lie in [0,1]");
    return ScalarFunction(Kind::MinLeakyRelu, alpha);
  }

  /// Interpolates the given knots and extends the end segments linearly.
  /// xs strictly increasing, at least two knots.
  static ScalarFunction piecewise_linear(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() < 2 || xs.size() != ys.size())
      throw std::invalid_argument("piecewise_linear needs matching knot lists, length >= 2");
    for (size_t k = 0; k + 1 < xs.size(); ++k)
      if (!(xs[k] < xs[k + 1]))
        throw std::invalid_argument("piecewise_linear knots must be strictly increasing");
    for (double v : xs)
      if (!std::isfinite(v)) throw std::invalid_argument("piecewise_linear knots must be finite");
    for (double v : ys)
      if (!std::isfinite(v)) throw std::invalid_argument("piecewise_linear values must be finite");
    ScalarFunction f(Kind::PiecewiseLinear, 0.0);
    f.xs_ = std::move(xs);
    f.ys_ = std::move(ys);
    return f;
  }

  Kind kind() const { return kind_; }
  double parameter() const { return param_; }
  const std::vector<double>& knots_x() const { return xs_; }
  const std::vector<double>& knots_y() const { return ys_; }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::Identity:
        return x;
      case Kind::Linear:
        return param_ * x;
      case Kind::LeakyRelu:
        return std::max(param_ * x, x);
      case Kind::MinLeakyRelu:
        return std::min(param_ * x, x);
      case Kind::PiecewiseLinear: {
        size_t seg = segment_of(x);
        double t = (x - xs_[seg]);
        return ys_[seg] + segment_slope(seg) * t;
      }
    }
    return x;
  }

  SectorBounds slope_range() const {
    switch (kind_) {
      case Kind::Identity:
        return {1.0, 1.0};
      case Kind::Linear:
        return {param_, param_};
      case Kind::LeakyRelu:
      case Kind::MinLeakyRelu:
        return {std::min(param_, 1.0), std::max(param_, 1.0)};
      case Kind::PiecewiseLinear: {
        double lo = segment_slope(0), hi = segment_slope(0);
        for (size_t k = 1; k + 1 < xs_.size(); ++k) {
          lo = std::min(lo, segment_slope(k));
          hi = std::max(hi, segment_slope(k));
        }
        return {lo, hi};
      }
    }
    return {1.0, 1.0};
  }

  double lipschitz() const {
    SectorBounds s = slope_range();
    return std::max(std::abs(s.d1), std::abs(s.d2));
  }

  /// Smallest slope among the segments touching x = 0.
  double min_slope_at_zero() const {
    if (kind_ != Kind::PiecewiseLinear) {
      SectorBounds s = slope_range();
      return s.d1;
    }
    double best = std::numeric_limits<double>::infinity();
    size_t m = xs_.size() - 1;
    for (size_t k = 0; k < m; ++k) {
      double left = (k == 0) ? -std::numeric_limits<double>::infinity() : xs_[k];
      double right = (k + 1 == m) ? std::numeric_limits<double>::infinity() : xs_[k + 1];
      if (left <= 0.0 && 0.0 <= right) best = std::min(best, segment_slope(k));
    }
    return best;
  }

  bool fixes_zero(double tol = 1e-12) const { return std::abs((*this)(0.0)) <= tol; }

 private:
  ScalarFunction(Kind kind, double param) : kind_(kind), param_(param) {}

  double segment_slope(size_t k) const {
    return (ys_[k + 1] - ys_[k]) / (xs_[k + 1] - xs_[k]);
  }

  // Index of the segment whose extension covers x; interior knots belong to
  // the segment on their right.
  size_t segment_of(double x) const {
    if (x <= xs_.front()) return 0;
    if (x >= xs_.back()) return xs_.size() - 2;
    size_t hi = static_cast<size_t>(
        std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin());
    return hi - 1;
  }

  Kind kind_;
  double param_;
  std::vector<double> xs_, ys_;
};

/// Evaluable map with a finite description of its Jacobian set.
class Operator {
 public:
  virtual ~Operator() = default;
  virtual Index dim() const = 0;
  virtual Vector evaluate(const Vector& x) const = 0;
  virtual JacobianEnvelope jacobian_envelope() const = 0;

 protected:
  void require_dim(const Vector& x) const {
    if (x.size() != dim()) throw std::invalid_argument("operator input dimension mismatch");
  }
};

/// x -> Ax + offset.
class AffineOperator final : public Operator {
 public:
  AffineOperator(Matrix a, Vector offset) : a_(std::move(a)), offset_(std::move(offset)) {
    require_square(a_, "affine matrix");
    require_finite(a_, "affine matrix");
    if (offset_.size() != a_.rows())
      throw std::invalid_argument("affine offset dimension mismatch");
    if (!offset_.allFinite()) throw std::invalid_argument("affine offset has non-finite entries");
  }

  Index dim() const override { return a_.rows(); }
  Vector evaluate(const Vector& x) const override {
    require_dim(x);
    return a_ * x + offset_;
  }
  JacobianEnvelope jacobian_envelope() const override {
    return JacobianEnvelope::from_vertices({a_});
  }

  const Matrix& matrix() const { return a_; }
  const Vector& offset() const { return offset_; }

 private:
  Matrix a_;
  Vector offset_;
};

/// x -> phi(Ax + offset) with phi applied componentwise. Every Jacobian row
/// is a shared slope d in [d1, d2] times the matching row of A, so the
/// two-vertex envelope {d1*A, d2*A} is exact for row-convex functionals.
class DiagNonlinAffineOperator final : public Operator {
 public:
  DiagNonlinAffineOperator(Matrix a, Vector offset, ScalarFunction activation)
      : DiagNonlinAffineOperator(std::move(a), std::move(offset), std::move(activation),
                                 std::nullopt) {}

  DiagNonlinAffineOperator(Matrix a, Vector offset, ScalarFunction activation,
                           std::optional<SectorBounds> sector)
      : a_(std::move(a)),
        offset_(std::move(offset)),
        activation_(std::move(activation)),
        sector_(sector ? *sector : activation_.slope_range()) {
    require_square(a_, "composed map matrix");
    require_finite(a_, "composed map matrix");
    if (offset_.size() != a_.rows())
      throw std::invalid_argument("composed map offset dimension mismatch");
    if (!offset_.allFinite())
      throw std::invalid_argument("composed map offset has non-finite entries");
    if (!(sector_.d1 <= sector_.d2))
      throw std::invalid_argument("sector bounds must satisfy d1 <= d2");
    spot_check_sector();
  }

  Index dim() const override { return a_.rows(); }
  Vector evaluate(const Vector& x) const override {
    require_dim(x);
    Vector z = a_ * x + offset_;
    for (Index i = 0; i < z.size(); ++i) z[i] = activation_(z[i]);
    return z;
  }
  JacobianEnvelope jacobian_envelope() const override {
    return JacobianEnvelope::from_vertices({sector_.d1 * a_, sector_.d2 * a_});
  }

  const Matrix& matrix() const { return a_; }
  const Vector& offset() const { return offset_; }
  const ScalarFunction& activation() const { return activation_; }
  SectorBounds sector() const { return sector_; }

 private:
  // Sampled difference quotients of the activation must lie in the declared
  // sector.
  void spot_check_sector() const {
    std::mt19937_64 rng(0x5eC70Bu);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    for (int t = 0; t < 64; ++t) {
      double u = dist(rng), v = dist(rng);
      if (std::abs(u - v) < 1e-6) continue;
      double q = (activation_(u) - activation_(v)) / (u - v);
      if (q < sector_.d1 - 1e-9 || q > sector_.d2 + 1e-9)
        throw std::invalid_argument("activation difference quotient escapes sector bounds");
    }
  }

  Matrix a_;
  Vector offset_;
  ScalarFunction activation_;
  SectorBounds sector_;
};

}  // namespace ewc
