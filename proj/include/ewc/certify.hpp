// Certificates and optimizers: enriched weak contractivity, strong
// monotonicity, order preservation, subhomogeneity, minimal shift, optimal
// rate, and step-size plans.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ewc/envelope.hpp"
#include "ewc/matnorm.hpp"
#include "ewc/operators.hpp"
#include "ewc/types.hpp"

namespace ewc {

struct CheckResult {
  double residual = 0.0;
  bool feasible = false;
};

/// Witness that ||b(x-y) + T(x) - T(y)|| <= (b-c+1)||x-y|| in the weighted
/// sup-norm of eta, verified through the Jacobian envelope. residual is the
/// worst row excess max_i (sup_J |bI+J| eta)_i / eta_i - (b-c+1).
struct EwcCertificate {
  double b = 0.0;
  double c = 0.0;
  PositiveWeight eta;
  double residual = 0.0;
  bool feasible = false;
};

/// max_i (sup over env of |bI + J| eta)_i / eta_i.
inline double shifted_abs_quotient(const JacobianEnvelope& env, double b,
                                   const Vector& eta) {
  return worst_abs_row_sums(env, b, eta).cwiseQuotient(eta).maxCoeff();
}

inline EwcCertificate check_ewc(const JacobianEnvelope& env, double b, double c,
                                const PositiveWeight& eta, double tol = 1e-9) {
  if (b < 0.0) throw std::invalid_argument("check_ewc: b must be nonnegative");
  if (c < 0.0 || c > b + 1.0)
    throw std::invalid_argument("check_ewc: c must lie in [0, b+1]");
  double residual = shifted_abs_quotient(env, b, eta.vec()) - (b - c + 1.0);
  return EwcCertificate{b, c, eta, residual, residual <= tol};
}

inline EwcCertificate check_weak_contractive(const JacobianEnvelope& env,
                                             const PositiveWeight& eta,
                                             double tol = 1e-9) {
  return check_ewc(env, 0.0, 0.0, eta, tol);
}

/// Strict version: feasible only when the worst row sum stays below eta by
/// more than tol.
inline EwcCertificate check_contractive(const JacobianEnvelope& env,
                                        const PositiveWeight& eta, double tol = 1e-9) {
  EwcCertificate cert = check_ewc(env, 0.0, 0.0, eta, tol);
  cert.feasible = cert.residual < -tol;
  return cert;
}

/// Differential c-strong monotonicity of F: sup over the envelope of F's
/// Jacobians of (metzler_majorant(-J) eta + c eta) <= 0.
inline CheckResult check_strong_monotone(const JacobianEnvelope& env_f, double c,
                                         const PositiveWeight& eta, double tol = 1e-9) {
  if (c < 0.0) throw std::invalid_argument("check_strong_monotone: c must be nonnegative");
  Vector worst = worst_metzler_row_sums(transform(env_f, -1.0, 0.0), eta.vec());
  double residual = worst.cwiseQuotient(eta.vec()).maxCoeff() + c;
  return CheckResult{residual, residual <= tol};
}

/// True iff every Jacobian in the envelope is entrywise nonnegative.
inline bool check_order_preserving(const JacobianEnvelope& env, double bound = -1e-12) {
  return entry_lower(env).minCoeff() >= bound;
}

/// Differential subhomogeneity: sup over the envelope of (J eta - (1-c) eta)
/// <= 0, signed.
inline CheckResult check_subhomogeneous(const JacobianEnvelope& env, double c,
                                        const PositiveWeight& eta, double tol = 1e-9) {
  if (c < 0.0) throw std::invalid_argument("check_subhomogeneous: c must be nonnegative");
  Vector worst = worst_signed_row_sums(env, eta.vec());
  double residual = worst.cwiseQuotient(eta.vec()).maxCoeff() - (1.0 - c);
  return CheckResult{residual, residual <= tol};
}

struct WeightSearch {
  PositiveWeight eta;
  double c_max = 0.0;
  double mu = 0.0;  // worst quotient of |bI+J| at eta; rate numerator
  bool feasible = false;
  EwcCertificate cert;
};

/// Best weight for a given shift b: power-iterates the monotone map
/// eta -> sup_J |bI+J| eta, floors the limit vector to keep it strictly
/// positive, evaluates the quotient there, and re-verifies the resulting
/// (b, c_max) pair directly. The floor (1e-8 of the max component) sits well
/// above the certificate tolerance, so reducible envelopes whose Perron
/// vector has zero components are rejected by the re-check instead of
/// slipping through on rounding.
inline WeightSearch find_weight(const JacobianEnvelope& env, double b, double tol = 1e-9,
                                const Vector* warm_start = nullptr,
                                double perron_tol = 1e-12, int perron_iters = 10000) {
  if (b < 0.0) throw std::invalid_argument("find_weight: b must be nonnegative");
  const Index n = env.dim();
  auto apply = [&](const Vector& v) -> Vector { return worst_abs_row_sums(env, b, v); };
  PerronResult pr = perron_of_map(apply, n, perron_tol, perron_iters, warm_start);
  Vector eta_vec = pr.v.cwiseMax(1e-8 * pr.v.maxCoeff());
  PositiveWeight eta(eta_vec);
  double mu = shifted_abs_quotient(env, b, eta_vec);
  double c_max = (b + 1.0) - mu;
  // Deficits within the certificate tolerance are rounding, not infeasibility.
  if (c_max < 0.0 && c_max >= -tol) c_max = 0.0;
  if (c_max < 0.0) {
    EwcCertificate cert = check_ewc(env, b, 0.0, eta, tol);
    return WeightSearch{eta, 0.0, mu, false, cert};
  }
  EwcCertificate cert = check_ewc(env, b, c_max, eta, tol);
  return WeightSearch{eta, c_max, mu, cert.feasible, cert};
}

namespace detail {

// Margin (b+1) - mu(b) of the zero-c feasibility test, either with the
// Perron-derived weight or a caller-fixed one. Nondecreasing in b: raising b
// by d raises every |b + J_ii| by at most d.
class MarginEvaluator {
 public:
  MarginEvaluator(const JacobianEnvelope& env, const PositiveWeight* fixed_eta)
      : env_(env), fixed_eta_(fixed_eta) {}

  double operator()(double b) {
    if (fixed_eta_ != nullptr)
      return (b + 1.0) - shifted_abs_quotient(env_, b, fixed_eta_->vec());
    WeightSearch ws = find_weight(env_, b, 1e-9, warm_.size() ? &warm_ : nullptr);
    warm_ = ws.eta.vec();
    return (b + 1.0) - ws.mu;
  }

 private:
  const JacobianEnvelope& env_;
  const PositiveWeight* fixed_eta_;
  Vector warm_;
};

}  // namespace detail

/// Smallest b (within tol_b) whose zero-c certificate is feasible, or nullopt
/// when even the upper search endpoint max(0, diag_lower) + 1 fails. The
/// margin is nondecreasing in b, so a grid scan plus bisection is exact.
/// fixed_eta switches from the Perron-derived weight to the given one.
inline std::optional<double> min_b(const JacobianEnvelope& env,
                                   const PositiveWeight* fixed_eta = nullptr,
                                   double tol_b = 1e-4) {
  detail::MarginEvaluator margin(env, fixed_eta);
  const double hi_end = std::max(0.0, diag_lower(env)) + 1.0;
  if (margin(0.0) >= 0.0) return 0.0;
  if (margin(hi_end) < 0.0) return std::nullopt;
  constexpr int kGrid = 1000;
  double lo = 0.0, hi = hi_end;
  for (int k = 1; k <= kGrid; ++k) {
    double b = hi_end * k / kGrid;
    if (margin(b) >= 0.0) {
      hi = b;
      lo = hi_end * (k - 1) / kGrid;
      break;
    }
  }
  while (hi - lo > tol_b) {
    double mid = 0.5 * (lo + hi);
    if (margin(mid) >= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

struct RateOptimum {
  double b = 0.0;
  double c = 0.0;
  PositiveWeight eta;
  double rate = 1.0;
  bool feasible = false;
};

namespace detail {

struct RateProbe {
  double rate;
  WeightSearch ws;
};

inline RateProbe probe_rate(const JacobianEnvelope& env, double b,
                            const PositiveWeight* fixed_eta, const Vector* warm) {
  if (fixed_eta != nullptr) {
    double mu = shifted_abs_quotient(env, b, fixed_eta->vec());
    double c_max = (b + 1.0) - mu;
    EwcCertificate cert =
        check_ewc(env, b, std::clamp(c_max, 0.0, b + 1.0), *fixed_eta);
    WeightSearch ws{*fixed_eta, std::max(c_max, 0.0), mu, c_max >= 0.0 && cert.feasible,
                    cert};
    return {mu / (b + 1.0), std::move(ws)};
  }
  WeightSearch ws = find_weight(env, b, 1e-9, warm);
  return {ws.mu / (b + 1.0), std::move(ws)};
}

}  // namespace detail

/// Minimizes rate(b) = mu(b)/(b+1), the certified contraction factor of the
/// averaged operator, over b >= 0: a 1,000-point grid on
/// [0, max(0, diag_lower) + 2] joined with the two structural points
/// {0, diag_lower}, then golden-section refinement of the best bracket.
/// Rate ties resolve to the smallest b (largest step range). fixed_eta
/// reproduces fixed-weight programs; otherwise the weight is the Perron
/// vector at the optimum.
inline RateOptimum optimize_rate(const JacobianEnvelope& env,
                                 const PositiveWeight* fixed_eta = nullptr) {
  const double dl = std::max(0.0, diag_lower(env));
  const double hi_end = dl + 2.0;
  constexpr int kGrid = 1000;
  std::vector<double> grid;
  grid.reserve(kGrid + 3);
  for (int k = 0; k <= kGrid; ++k) grid.push_back(hi_end * k / kGrid);
  grid.push_back(dl);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  Vector warm;
  int best_idx = 0;
  double best_rate = std::numeric_limits<double>::infinity();
  std::optional<detail::RateProbe> best;
  for (size_t k = 0; k < grid.size(); ++k) {
    const Vector* w = warm.size() ? &warm : nullptr;
    detail::RateProbe probe = detail::probe_rate(env, grid[k], fixed_eta, w);
    warm = probe.ws.eta.vec();
    if (probe.rate < best_rate - 1e-12) {
      best_rate = probe.rate;
      best_idx = static_cast<int>(k);
      best = std::move(probe);
    }
  }

  // Golden-section refinement inside the bracket around the best grid point;
  // the curve has kinks, so keep the grid winner if refinement fails to beat
  // it.
  double a = grid[static_cast<size_t>(std::max(best_idx - 1, 0))];
  double bnd = grid[std::min(static_cast<size_t>(best_idx + 1), grid.size() - 1)];
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = bnd - gr * (bnd - a), x2 = a + gr * (bnd - a);
  detail::RateProbe p1 = detail::probe_rate(env, x1, fixed_eta, &warm);
  detail::RateProbe p2 = detail::probe_rate(env, x2, fixed_eta, &warm);
  while (bnd - a > 1e-6) {
    if (p1.rate < p2.rate) {
      bnd = x2;
      x2 = x1;
      p2 = p1;
      x1 = bnd - gr * (bnd - a);
      p1 = detail::probe_rate(env, x1, fixed_eta, &warm);
    } else {
      a = x1;
      x1 = x2;
      p1 = p2;
      x2 = a + gr * (bnd - a);
      p2 = detail::probe_rate(env, x2, fixed_eta, &warm);
    }
  }
  double b_ref = 0.5 * (a + bnd);
  detail::RateProbe refined = detail::probe_rate(env, b_ref, fixed_eta, &warm);
  double b_star = grid[static_cast<size_t>(best_idx)];
  if (refined.rate < best_rate - 1e-12 ||
      (refined.rate <= best_rate + 1e-12 && b_ref < b_star)) {
    best_rate = refined.rate;
    best = std::move(refined);
    b_star = b_ref;
  }

  if (!best->ws.feasible)
    return RateOptimum{b_star, 0.0, best->ws.eta, best_rate, false};
  return RateOptimum{b_star, best->ws.c_max, best->ws.eta, best_rate, true};
}

struct StepSizePlan {
  enum class Source { Ewc, MonotoneBaseline, ConsensusBound };

  double theta_max = 0.0;
  bool open_bound = false;  // theta_max itself excluded
  double theta_star = 0.0;
  double c = 0.0;
  double rate_bound = 1.0;
  Source source = Source::Ewc;
  bool feasible = true;
};

/// Step plan for the averaged iteration from a feasible certificate:
/// theta_max = 1/(b+1), open when c = 0; theta_star takes the boundary when
/// c > 0 and backs off by a relative 1e-6 otherwise.
inline StepSizePlan krasnoselskij_plan(const EwcCertificate& cert) {
  if (!cert.feasible)
    throw std::invalid_argument("krasnoselskij_plan: certificate is infeasible");
  StepSizePlan plan;
  plan.source = StepSizePlan::Source::Ewc;
  plan.theta_max = 1.0 / (cert.b + 1.0);
  plan.open_bound = cert.c == 0.0;
  plan.theta_star = plan.open_bound ? plan.theta_max * (1.0 - 1e-6) : plan.theta_max;
  plan.c = cert.c;
  plan.rate_bound = 1.0 - plan.theta_star * cert.c;
  return plan;
}

/// Monotonicity-based baseline plan: theta from the smallest diagonal slope,
/// c from the Metzler worst case over the whole envelope, clamped to
/// c <= 1/theta. With fixed_eta the modulus is evaluated at that weight;
/// otherwise it is the joint shifted Perron root (one weight for all
/// vertices), which maximizes c.
inline StepSizePlan monotone_baseline_plan(const JacobianEnvelope& env,
                                           SectorBounds sector,
                                           const Vector& diag_entries,
                                           const PositiveWeight* fixed_eta = nullptr) {
  if (diag_entries.size() != env.dim())
    throw std::invalid_argument("monotone_baseline_plan: diagonal size mismatch");
  double min_diag_slope = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < diag_entries.size(); ++i)
    min_diag_slope = std::min(min_diag_slope,
                              std::min(sector.d1 * diag_entries[i],
                                       sector.d2 * diag_entries[i]));
  double denom = 1.0 - min_diag_slope;

  StepSizePlan plan;
  plan.source = StepSizePlan::Source::MonotoneBaseline;
  if (denom <= 1e-12) {
    plan.theta_max = std::numeric_limits<double>::infinity();
    plan.theta_star = 1.0;
  } else {
    plan.theta_max = 1.0 / denom;
    plan.theta_star = plan.theta_max;
  }

  const Index n = env.dim();
  double mu;
  if (fixed_eta != nullptr) {
    const Vector& eta = fixed_eta->vec();
    mu = worst_metzler_row_sums(env, eta).cwiseQuotient(eta).maxCoeff();
  } else {
    const double s = 1.0 + std::max(0.0, diag_lower(env));
    auto apply = [&](const Vector& v) -> Vector {
      return worst_metzler_row_sums(env, v) + s * v;
    };
    PerronResult pr = perron_of_map(apply, n);
    Vector eta = pr.v.cwiseMax(1e-8 * pr.v.maxCoeff());
    mu = (apply(eta).cwiseQuotient(eta)).maxCoeff() - s;
  }
  double c = 1.0 - mu;
  if (c < 0.0) {
    plan.c = 0.0;
    plan.rate_bound = 1.0;
    plan.feasible = false;
    return plan;
  }
  plan.c = std::min(c, 1.0 / plan.theta_star);
  plan.rate_bound = 1.0 - plan.c * plan.theta_star;
  return plan;
}

/// Sampled form of the defining inequality, usable for any operator: checks
/// ||b(x-y) + T(x)-T(y)|| <= (b-c+1) ||x-y|| at one pair.
inline bool ewc_inequality_holds(const Operator& op, const EwcCertificate& cert,
                                 const Vector& x, const Vector& y, double slack = 1e-9) {
  double lhs = weighted_inf_norm(cert.b * (x - y) + op.evaluate(x) - op.evaluate(y),
                                 cert.eta);
  double rhs = (cert.b - cert.c + 1.0) * weighted_inf_norm(x - y, cert.eta);
  return lhs <= rhs + slack;
}

}  // namespace ewc
