#include "ewc/io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ewc {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

const Json& need(const Json& j, const char* key, const char* ctx) {
  auto it = j.find(key);
  if (it == j.end()) fail(std::string(ctx) + ": missing key '" + key + "'");
  return *it;
}

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  Json j;
  in >> j;
  return j;
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) fail("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j) {
  const char* ctx = "matrix";
  Index rows = need(j, "rows", ctx).get<Index>();
  Index cols = need(j, "cols", ctx).get<Index>();
  const Json& data = need(j, "data", ctx);
  if (rows < 0 || cols < 0) fail("matrix: negative shape");
  if (!data.is_array() || data.size() != static_cast<size_t>(rows * cols))
    fail("matrix: data length does not match shape");
  Matrix m(rows, cols);
  size_t k = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) m(i, c) = data[k++].get<double>();
  require_finite(m, "matrix");
  return m;
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) fail("vector: expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (size_t k = 0; k < j.size(); ++k) v[static_cast<Index>(k)] = j[k].get<double>();
  require_finite(v, "vector");
  return v;
}

ScalarFunction activation_from_json(const Json& j) {
  const char* ctx = "activation";
  std::string name = need(j, "name", ctx).get<std::string>();
  if (name == "identity") return ScalarFunction::identity();
  if (name == "linear")
    return ScalarFunction::linear(need(j, "slope", ctx).get<double>());
  if (name == "lrelu")
    return ScalarFunction::make_leaky_relu(need(j, "alpha", ctx).get<double>());
  if (name == "min_lrelu")
    return ScalarFunction::make_min_leaky_relu(need(j, "alpha", ctx).get<double>());
  if (name == "piecewise") {
    auto xs = need(j, "xs", ctx).get<std::vector<double>>();
    auto ys = need(j, "ys", ctx).get<std::vector<double>>();
    return ScalarFunction::piecewise_linear(std::move(xs), std::move(ys));
  }
  fail("activation: unknown name '" + name + "'");
}

std::unique_ptr<Operator> operator_from_json(const Json& j) {
  const char* ctx = "operator";
  std::string type = need(j, "type", ctx).get<std::string>();
  if (type == "affine") {
    Matrix a = matrix_from_json(need(j, "matrix", ctx));
    Vector u = vector_from_json(need(j, "offset", ctx));
    return std::make_unique<AffineOperator>(std::move(a), std::move(u));
  }
  if (type == "diag_nonlin_affine") {
    Matrix a = matrix_from_json(need(j, "matrix", ctx));
    Vector u = vector_from_json(need(j, "offset", ctx));
    ScalarFunction phi = activation_from_json(need(j, "activation", ctx));
    if (auto it = j.find("sector"); it != j.end()) {
      SectorBounds sector{need(*it, "d1", "sector").get<double>(),
                          need(*it, "d2", "sector").get<double>()};
      return std::make_unique<DiagNonlinAffineOperator>(std::move(a), std::move(u),
                                                        std::move(phi), sector);
    }
    return std::make_unique<DiagNonlinAffineOperator>(std::move(a), std::move(u),
                                                      std::move(phi));
  }
  if (type == "mas")
    return std::make_unique<NonlinearLaplacianOperator>(mas_model_from_json(j).op);
  fail("operator: unknown type '" + type + "'");
}

MasModel mas_model_from_json(const Json& j) {
  const char* ctx = "mas";
  Digraph graph(matrix_from_json(need(j, "adjacency", ctx)));
  double theta = need(j, "theta", ctx).get<double>();
  if (auto it = j.find("rules"); it != j.end()) {
    std::vector<EdgeRule> rules;
    for (const Json& r : *it)
      rules.push_back(EdgeRule{need(r, "i", "rule").get<Index>(),
                               need(r, "j", "rule").get<Index>(),
                               activation_from_json(r)});
    return make_mas_model(graph, rules, theta);
  }
  return make_mas_model(graph, activation_from_json(need(j, "rule", ctx)), theta);
}

Json certificate_to_json(const EwcCertificate& cert) {
  return Json{{"b", cert.b},
              {"c", cert.c},
              {"eta", vector_to_json(cert.eta.vec())},
              {"residual", cert.residual},
              {"feasible", cert.feasible}};
}

namespace {

const char* source_name(StepSizePlan::Source s) {
  switch (s) {
    case StepSizePlan::Source::Ewc:
      return "shift_certificate";
    case StepSizePlan::Source::MonotoneBaseline:
      return "monotone_baseline";
    case StepSizePlan::Source::ConsensusBound:
      return "consensus_bound";
  }
  return "unknown";
}

}  // namespace

Json plan_to_json(const StepSizePlan& plan) {
  return Json{{"theta_max", plan.theta_max},   {"open_bound", plan.open_bound},
              {"theta_star", plan.theta_star}, {"c", plan.c},
              {"rate_bound", plan.rate_bound}, {"source", source_name(plan.source)},
              {"feasible", plan.feasible}};
}

Json certificate_to_json(const EwcCertificate& cert, const StepSizePlan& plan) {
  Json j = certificate_to_json(cert);
  j["theta_max"] = plan.theta_max;
  j["theta_star"] = plan.theta_star;
  j["rate_bound"] = plan.rate_bound;
  j["source"] = source_name(plan.source);
  return j;
}

void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
  if (trace.points.empty()) fail("trace: no points to write");
  const Index n = trace.points.front().size();
  out << "k";
  for (Index i = 0; i < n; ++i) out << ",x_" << (i + 1);
  out << ",residual\n";
  out.precision(17);
  for (size_t k = 0; k < trace.points.size(); ++k) {
    out << k;
    for (Index i = 0; i < n; ++i) out << ',' << trace.points[k][i];
    if (k == 0)
      out << ",nan";
    else
      out << ',' << trace.step_residuals[k - 1];
    out << '\n';
  }
}

void write_trace_csv_file(const std::string& path, const IterationTrace& trace) {
  std::ofstream out(path);
  if (!out) fail("cannot open " + path + " for writing");
  write_trace_csv(out, trace);
}

Json trace_summary_json(const IterationTrace& trace) {
  Json j{{"steps", trace.step_residuals.size()},
         {"converged", trace.converged},
         {"diverged", trace.diverged},
         {"stopped_early", trace.stopped_early}};
  if (!trace.step_residuals.empty()) j["last_residual"] = trace.last_residual();
  double rate = trace.empirical_rate();
  if (std::isfinite(rate)) j["empirical_rate"] = rate;
  if (!trace.points.empty()) j["final_point"] = vector_to_json(trace.points.back());
  return j;
}

}  // namespace ewc
