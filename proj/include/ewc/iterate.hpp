// Damped fixed-point and forward-step iterations with trace capture and
// post-hoc contraction verification.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ewc/matnorm.hpp"
#include "ewc/operators.hpp"
#include "ewc/types.hpp"

namespace ewc {

struct IterationConfig {
  double theta;
  int max_iters = 100000;
  double stop_tol = 1e-10;
  PositiveWeight weight;

  IterationConfig(double theta_, int max_iters_, double stop_tol_, PositiveWeight weight_)
      : theta(theta_), max_iters(max_iters_), stop_tol(stop_tol_), weight(std::move(weight_)) {
    if (!(theta > 0.0) || theta > 1.0)
      throw std::invalid_argument("IterationConfig: theta must lie in (0, 1]");
    if (max_iters < 0) throw std::invalid_argument("IterationConfig: max_iters < 0");
    if (!(stop_tol >= 0.0)) throw std::invalid_argument("IterationConfig: stop_tol < 0");
  }
};

/// Recorded trajectory. points holds x_0..x_K; step_residuals[k] is the
/// weighted sup-norm of x_{k+1} - x_k, so it has points.size() - 1 entries.
struct IterationTrace {
  std::vector<Vector> points;
  std::vector<double> step_residuals;
  bool converged = false;
  bool diverged = false;
  bool stopped_early = false;

  double last_residual() const {
    return step_residuals.empty() ? std::numeric_limits<double>::quiet_NaN()
                                  : step_residuals.back();
  }

  /// Steps until the residual first dropped to the stop tolerance: the count
  /// of residuals above it.
  int iterations_to_tolerance(double tol) const {
    int k = 0;
    for (double r : step_residuals)
      if (r > tol) ++k;
    return k;
  }

  /// Geometric mean of residual ratios over the tail half of the run, an
  /// empirical contraction factor.
  double empirical_rate() const {
    const size_t m = step_residuals.size();
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    size_t lo = m / 2;
    if (lo == 0) lo = 1;
    double log_sum = 0.0;
    int counted = 0;
    for (size_t k = lo; k < m; ++k) {
      double prev = step_residuals[k - 1], cur = step_residuals[k];
      if (prev <= 0.0 || cur <= 0.0) continue;
      log_sum += std::log(cur / prev);
      ++counted;
    }
    if (counted == 0) return std::numeric_limits<double>::quiet_NaN();
    return std::exp(log_sum / counted);
  }
};

using StopPredicate = std::function<bool(const Vector&)>;

namespace detail {

constexpr double kDivergenceGuard = 1e12;

/// Runs x_{k+1} = x_k + step(x_k) until the weighted step norm reaches
/// stop_tol, divergence trips the guard, or the iteration budget or the
/// caller's predicate ends the run.
inline IterationTrace run_damped(const std::function<Vector(const Vector&)>& step,
                                 const IterationConfig& cfg, const Vector& x0,
                                 const StopPredicate& stop_early) {
  if (x0.size() != cfg.weight.vec().size())
    throw std::invalid_argument("iterate: initial point does not match weight size");
  IterationTrace trace;
  trace.points.reserve(static_cast<size_t>(cfg.max_iters) + 1);
  trace.points.push_back(x0);
  Vector x = x0;
  for (int k = 0; k < cfg.max_iters; ++k) {
    Vector dx = step(x);
    x += dx;
    double res = weighted_inf_norm(dx, cfg.weight);
    trace.points.push_back(x);
    trace.step_residuals.push_back(res);
    if (!std::isfinite(res) || x.cwiseAbs().maxCoeff() > kDivergenceGuard) {
      trace.diverged = true;
      return trace;
    }
    if (res <= cfg.stop_tol) {
      trace.converged = true;
      return trace;
    }
    if (stop_early && stop_early(x)) {
      trace.stopped_early = true;
      return trace;
    }
  }
  return trace;
}

}  // namespace detail

/// Damped fixed-point iteration x <- x + theta (T(x) - x).
inline IterationTrace krasnoselskij(const Operator& op, const IterationConfig& cfg,
                                    const Vector& x0,
                                    const StopPredicate& stop_early = nullptr) {
  auto step = [&](const Vector& x) -> Vector { return cfg.theta * (op.evaluate(x) - x); };
  return detail::run_damped(step, cfg, x0, stop_early);
}

/// Forward step x <- x - theta F(x) on a residual operator F.
inline IterationTrace forward_step(const Operator& op_f, const IterationConfig& cfg,
                                   const Vector& x0,
                                   const StopPredicate& stop_early = nullptr) {
  auto step = [&](const Vector& x) -> Vector { return -cfg.theta * op_f.evaluate(x); };
  return detail::run_damped(step, cfg, x0, stop_early);
}

/// Checks ||x_{k+1} - x*|| <= rate ||x_k - x*|| along the whole trace, in the
/// weighted sup-norm, with additive slack for roundoff near the fixed point.
inline bool verify_contraction_rate(const IterationTrace& trace, const Vector& x_star,
                                    double rate_bound, const PositiveWeight& weight,
                                    double slack = 1e-9) {
  if (rate_bound < 0.0)
    throw std::invalid_argument("verify_contraction_rate: negative rate");
  for (size_t k = 0; k + 1 < trace.points.size(); ++k) {
    double d0 = weighted_inf_norm(trace.points[k] - x_star, weight);
    double d1 = weighted_inf_norm(trace.points[k + 1] - x_star, weight);
    if (d1 > rate_bound * d0 + slack) return false;
  }
  return true;
}

}  // namespace ewc
