// Nonlinear multi-agent consensus: directed interaction graphs, per-edge
// coupling rules, step bounds, reachability, and simulation to agreement.
#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ewc/envelope.hpp"
#include "ewc/iterate.hpp"
#include "ewc/operators.hpp"
#include "ewc/types.hpp"

namespace ewc {

/// Directed interaction graph on binary adjacency: a(i, j) = 1 means agent i
/// measures agent j, so j's state can reach i.
class Digraph {
 public:
  explicit Digraph(Matrix adjacency) : a_(std::move(adjacency)) {
    require_square(a_, "Digraph adjacency");
    for (Index i = 0; i < a_.rows(); ++i) {
      if (a_(i, i) != 0.0)
        throw std::invalid_argument("Digraph: diagonal must be zero");
      for (Index j = 0; j < a_.cols(); ++j)
        if (a_(i, j) != 0.0 && a_(i, j) != 1.0)
          throw std::invalid_argument("Digraph: adjacency entries must be 0 or 1");
    }
  }

  Index n() const { return a_.rows(); }
  const Matrix& adjacency() const { return a_; }
  bool has_edge(Index i, Index j) const { return a_(i, j) == 1.0; }
  int degree(Index i) const { return static_cast<int>(a_.row(i).sum()); }

  int max_degree() const {
    int d = 0;
    for (Index i = 0; i < n(); ++i) d = std::max(d, degree(i));
    return d;
  }

  int edge_count() const { return static_cast<int>(a_.sum()); }

 private:
  Matrix a_;
};

inline Digraph ring_graph(Index n) {
  if (n < 2) throw std::invalid_argument("ring_graph: need at least 2 nodes");
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) a(i, (i + 1) % n) = 1.0;
  return Digraph(a);
}

/// Hub-and-leaves with edges in both directions.
inline Digraph star_graph(Index n) {
  if (n < 2) throw std::invalid_argument("star_graph: need at least 2 nodes");
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 1; i < n; ++i) {
    a(0, i) = 1.0;
    a(i, 0) = 1.0;
  }
  return Digraph(a);
}

inline Digraph complete_graph(Index n) {
  if (n < 2) throw std::invalid_argument("complete_graph: need at least 2 nodes");
  Matrix a = Matrix::Ones(n, n);
  a.diagonal().setZero();
  return Digraph(a);
}

/// True iff some node's state reaches every other node along measurement
/// edges; computed by boolean repeated squaring of adjacency plus self-loops.
inline bool has_globally_reachable_node(const Digraph& g) {
  const Index n = g.n();
  Matrix r = g.adjacency() + Matrix::Identity(n, n);
  r = (r.array() > 0.0).cast<double>();
  for (Index span = 1; span < n; span *= 2)
    r = ((r * r).array() > 0.0).cast<double>();
  for (Index j = 0; j < n; ++j)
    if ((r.col(j).array() > 0.0).all()) return true;
  return false;
}

struct EdgeRule {
  Index i = 0;
  Index j = 0;
  ScalarFunction f = ScalarFunction::identity();
};

/// Consensus fixed-point operator T(x)_i = x_i - sum_{j in N_i} f_ij(x_i-x_j).
/// Agreement states are exactly its fixed points when the graph has a
/// globally reachable node. Every Jacobian has unit row sums, captured by a
/// row-coupled envelope with coupling 1.
class NonlinearLaplacianOperator : public Operator {
 public:
  NonlinearLaplacianOperator(Digraph graph, std::vector<ScalarFunction> rules,
                             std::vector<int> rule_of_edge)
      : graph_(std::move(graph)),
        rules_(std::move(rules)),
        rule_of_edge_(std::move(rule_of_edge)) {}

  Index dim() const override { return graph_.n(); }

  Vector evaluate(const Vector& x) const override {
    require_dim(x);
    const Index n = graph_.n();
    Vector out = x;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (graph_.has_edge(i, j))
          out[i] -= rule(i, j)(x[i] - x[j]);
    return out;
  }

  JacobianEnvelope jacobian_envelope() const override {
    const Index n = graph_.n();
    Matrix lo = Matrix::Zero(n, n), hi = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (graph_.has_edge(i, j)) {
          auto [s_lo, s_hi] = rule(i, j).slope_range();
          lo(i, j) = s_lo;
          hi(i, j) = s_hi;
        }
    return JacobianEnvelope::coupled_rows(lo, hi, 1.0);
  }

  const Digraph& graph() const { return graph_; }

  const ScalarFunction& rule(Index i, Index j) const {
    int r = rule_of_edge_[static_cast<size_t>(i * graph_.n() + j)];
    if (r < 0) throw std::logic_error("NonlinearLaplacianOperator: not an edge");
    return rules_[static_cast<size_t>(r)];
  }

  /// Largest slope over all edge rules.
  double max_edge_lipschitz() const {
    double l = 0.0;
    for (const ScalarFunction& f : rules_) l = std::max(l, f.lipschitz());
    return l;
  }

 private:
  Digraph graph_;
  std::vector<ScalarFunction> rules_;
  std::vector<int> rule_of_edge_;  // n*n, -1 off edges
};

namespace detail {

inline void validate_edge_rule(const ScalarFunction& f, Index i, Index j) {
  std::ostringstream where;
  where << "edge (" << i << ", " << j << ")";
  auto [lo, hi] = f.slope_range();
  if (lo < 0.0)
    throw std::invalid_argument("build_mas_operator: " + where.str() +
                                ": rule slopes must be nonnegative");
  if (!f.fixes_zero())
    throw std::invalid_argument("build_mas_operator: " + where.str() +
                                ": rule must map 0 to 0");
  if (!(f.min_slope_at_zero() > 0.0))
    throw std::invalid_argument(
        "build_mas_operator: " + where.str() +
        ": rule slope at 0 must be positive, or agents stall short of "
        "agreement");
  (void)hi;
}

}  // namespace detail

/// Assembles the consensus operator from one rule per edge. Every edge needs
/// exactly one rule; rules must be nondecreasing, fix zero, and have positive
/// slope at zero.
inline NonlinearLaplacianOperator build_mas_operator(const Digraph& graph,
                                                     const std::vector<EdgeRule>& rules) {
  const Index n = graph.n();
  std::vector<int> rule_of_edge(static_cast<size_t>(n * n), -1);
  std::vector<ScalarFunction> fs;
  fs.reserve(rules.size());
  for (const EdgeRule& r : rules) {
    if (r.i < 0 || r.i >= n || r.j < 0 || r.j >= n)
      throw std::invalid_argument("build_mas_operator: edge index out of range");
    if (!graph.has_edge(r.i, r.j)) {
      std::ostringstream msg;
      msg << "build_mas_operator: rule given for absent edge (" << r.i << ", "
          << r.j << ")";
      throw std::invalid_argument(msg.str());
    }
    size_t flat = static_cast<size_t>(r.i * n + r.j);
    if (rule_of_edge[flat] != -1) {
      std::ostringstream msg;
      msg << "build_mas_operator: duplicate rule for edge (" << r.i << ", " << r.j
          << ")";
      throw std::invalid_argument(msg.str());
    }
    detail::validate_edge_rule(r.f, r.i, r.j);
    rule_of_edge[flat] = static_cast<int>(fs.size());
    fs.push_back(r.f);
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (graph.has_edge(i, j) && rule_of_edge[static_cast<size_t>(i * n + j)] < 0) {
        std::ostringstream msg;
        msg << "build_mas_operator: no rule for edge (" << i << ", " << j << ")";
        throw std::invalid_argument(msg.str());
      }
  return NonlinearLaplacianOperator(graph, std::move(fs), std::move(rule_of_edge));
}

/// Same rule on every edge.
inline NonlinearLaplacianOperator build_mas_operator(const Digraph& graph,
                                                     const ScalarFunction& f) {
  std::vector<EdgeRule> rules;
  for (Index i = 0; i < graph.n(); ++i)
    for (Index j = 0; j < graph.n(); ++j)
      if (graph.has_edge(i, j)) rules.push_back(EdgeRule{i, j, f});
  return build_mas_operator(graph, rules);
}

/// Largest step that keeps the damped update order-preserving for rules of
/// the given Lipschitz constant: 1 / (L * max in-degree).
inline double consensus_step_bound(const Digraph& graph, double lipschitz) {
  if (graph.edge_count() == 0)
    throw std::invalid_argument("consensus_step_bound: graph has no edges");
  if (!(lipschitz > 0.0))
    throw std::invalid_argument("consensus_step_bound: Lipschitz constant must be positive");
  return 1.0 / (lipschitz * graph.max_degree());
}

struct MasModel {
  Digraph graph;
  NonlinearLaplacianOperator op;
  double theta;
};

inline MasModel make_mas_model(const Digraph& graph, const std::vector<EdgeRule>& rules,
                               double theta) {
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument("make_mas_model: theta must lie in (0, 1]");
  return MasModel{graph, build_mas_operator(graph, rules), theta};
}

inline MasModel make_mas_model(const Digraph& graph, const ScalarFunction& f,
                               double theta) {
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument("make_mas_model: theta must lie in (0, 1]");
  return MasModel{graph, build_mas_operator(graph, f), theta};
}

struct ConsensusRun {
  IterationTrace trace;
  double final_gap = 0.0;
  std::optional<double> value;  // mean of the final state, set on agreement
};

/// Damped iteration of the consensus operator until the spread of agent
/// states closes to gap_tol (or the step/iteration budget runs out).
inline ConsensusRun simulate_consensus(const MasModel& model, const Vector& x0,
                                       int max_steps = 100000, double gap_tol = 1e-8) {
  IterationConfig cfg(model.theta, max_steps, 0.0,
                      PositiveWeight(Vector::Ones(model.graph.n())));
  auto agreement = [gap_tol](const Vector& x) {
    return x.maxCoeff() - x.minCoeff() <= gap_tol;
  };
  ConsensusRun run;
  run.trace = krasnoselskij(model.op, cfg, x0, agreement);
  const Vector& last = run.trace.points.back();
  run.final_gap = last.maxCoeff() - last.minCoeff();
  if (run.final_gap <= gap_tol) run.value = last.mean();
  return run;
}

}  // namespace ewc
