#include "ewc/experiments.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "ewc/consensus.hpp"
#include "ewc/envelope.hpp"
#include "ewc/iterate.hpp"
#include "ewc/matnorm.hpp"

namespace ewc {

namespace bench {

Matrix affine4() {
  Matrix a(4, 4);
  a << -1.07, -0.17, -0.53, -0.33,
        0.07,  0.42, -0.07,  0.15,
       -0.13, -0.10, -0.06, -0.30,
        0.04,  0.05, -0.21,  0.40;
  return a;
}

Matrix stiff4() {
  Matrix a(4, 4);
  a << -3.0,   0.0,   1.0,  -3.0,
        3.0, -15.0, -12.0,  -1.0,
        2.0,  -1.0,  -5.0,  -5.0,
       -2.0,   0.0,  -1.0,  -6.0;
  return 0.5 * a;
}

Vector stiff4_eta() {
  Vector eta(4);
  eta << 0.09, 1.0, 0.22, 0.07;
  return eta;
}

Matrix unit_radius2(double a) {
  Matrix m(2, 2);
  m << 1.0, 1.0,
       0.0, a;
  return m;
}

Matrix mix5() {
  Matrix a(5, 5);
  a <<  0.278,  0.111, -0.280, -0.134, -0.098,
       -0.189, -0.739, -0.207, -0.105, -0.066,
       -0.408, -0.355, -0.203,  0.301,  0.039,
        0.252,  0.246, -0.225, -0.537, -0.046,
        0.144,  0.253,  0.288,  0.225, -0.395;
  return 0.5 * a;
}

Vector mix5_eta() {
  Vector eta(5);
  eta << 2.673, 1.181, 2.215, 1.261, 1.498;
  return eta;
}

}  // namespace bench

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

namespace {

JacobianEnvelope sector_envelope(const Matrix& a, SectorBounds sector) {
  return JacobianEnvelope::from_vertices({sector.d1 * a, sector.d2 * a});
}

// Joint Metzler root of the envelope, shifted so the iterated map stays
// nonnegative; the root itself may be negative for strongly stable sectors.
double joint_metzler_root(const Matrix& a, SectorBounds sector) {
  JacobianEnvelope env = sector_envelope(a, sector);
  const double s = 1.0 + std::max(0.0, diag_lower(env));
  auto apply = [&](const Vector& v) -> Vector {
    return worst_metzler_row_sums(env, v) + s * v;
  };
  PerronResult pr = perron_of_map(apply, a.rows());
  Vector eta = pr.v.cwiseMax(1e-8 * pr.v.maxCoeff());
  return (apply(eta).cwiseQuotient(eta)).maxCoeff() - s;
}

}  // namespace

Matrix generate_dnl_matrix(Index n, double c_target, SectorBounds sector,
                           std::mt19937_64& rng) {
  if (n < 2) throw std::invalid_argument("generate_dnl_matrix: n must be at least 2");
  if (!(c_target >= 0.0))
    throw std::invalid_argument("generate_dnl_matrix: c_target must be nonnegative");
  const double gamma = 0.05 * (1.0 + c_target);
  const double diag_target = 1.0 - c_target - gamma;

  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = normal(rng);

  // Cap diagonals so the sector keeps the target modulus reachable; the cap
  // binds through whichever sector endpoint scales the diagonal larger.
  const double cap = diag_target >= 0.0 ? diag_target / sector.d2 : diag_target / sector.d1;
  for (Index i = 0; i < n; ++i) m(i, i) = std::min(m(i, i), cap);

  // The baseline step bound is only finite with a nonpositive diagonal entry.
  Index argmin = 0;
  m.diagonal().minCoeff(&argmin);
  if (m(argmin, argmin) > 0.0) m(argmin, argmin) = 0.0;

  Matrix diag_part = Matrix::Zero(n, n);
  diag_part.diagonal() = m.diagonal();
  Matrix off_part = m - diag_part;

  // Uniform offdiagonal shrink until the joint Metzler root leaves half the
  // target margin. The root grows with the shrink factor, so bisection on
  // the feasible side is exact.
  const double root_cap = 1.0 - c_target - 0.5 * gamma;
  double lo = 0.0, hi = 1.0;
  if (joint_metzler_root(diag_part + off_part, sector) <= root_cap) {
    lo = 1.0;
  } else {
    for (int it = 0; it < 40; ++it) {
      double mid = 0.5 * (lo + hi);
      if (joint_metzler_root(diag_part + mid * off_part, sector) <= root_cap)
        lo = mid;
      else
        hi = mid;
    }
  }
  return diag_part + lo * off_part;
}

DnlSweepResult sweep_dnl(const DnlSweepConfig& cfg) {
  DnlSweepResult result;
  for (int n : cfg.sizes) {
    for (size_t c_idx = 0; c_idx < cfg.c_grid.size(); ++c_idx) {
      for (int trial = 0; trial < cfg.trials; ++trial) {
        uint64_t stream = splitmix64(
            splitmix64(splitmix64(cfg.seed ^ static_cast<uint64_t>(n)) ^
                       static_cast<uint64_t>(c_idx)) ^
            static_cast<uint64_t>(trial));
        std::mt19937_64 rng(stream);
        Matrix a = generate_dnl_matrix(n, cfg.c_grid[c_idx], cfg.sector, rng);

        JacobianEnvelope env = sector_envelope(a, cfg.sector);
        StepSizePlan baseline = monotone_baseline_plan(env, cfg.sector, a.diagonal());
        RateOptimum opt = optimize_rate(env);
        if (!baseline.feasible || !opt.feasible || baseline.rate_bound <= 0.0) {
          ++result.skipped;
          continue;
        }
        result.rows.push_back(DnlRatioRow{n, cfg.c_grid[c_idx], trial, opt.rate,
                                          baseline.rate_bound,
                                          opt.rate / baseline.rate_bound});
      }
    }
  }
  return result;
}

double DnlSweepResult::mean_ratio(double c_target) const {
  double sum = 0.0;
  int count = 0;
  for (const DnlRatioRow& r : rows)
    if (r.c_target == c_target) {
      sum += r.ratio;
      ++count;
    }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / count;
}

double DnlSweepResult::max_ratio() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const DnlRatioRow& r : rows) m = std::max(m, r.ratio);
  return m;
}

void write_dnl_csv(std::ostream& out, const DnlSweepResult& result) {
  out << "n,c_target,trial,rate_opt,rate_baseline,ratio\n";
  out.precision(17);
  for (const DnlRatioRow& r : result.rows)
    out << r.n << ',' << r.c_target << ',' << r.trial << ',' << r.rate_opt << ','
        << r.rate_baseline << ',' << r.ratio << '\n';
}

Json dnl_summary_json(const DnlSweepResult& result) {
  Json per_target = Json::array();
  std::vector<double> targets;
  for (const DnlRatioRow& r : result.rows)
    if (std::find(targets.begin(), targets.end(), r.c_target) == targets.end())
      targets.push_back(r.c_target);
  std::sort(targets.begin(), targets.end());
  for (double c : targets)
    per_target.push_back(Json{{"c_target", c}, {"mean_ratio", result.mean_ratio(c)}});
  return Json{{"rows", result.rows.size()},
              {"skipped", result.skipped},
              {"max_ratio", result.max_ratio()},
              {"mean_ratio_by_target", std::move(per_target)}};
}

Json run_counter_experiment(int eta_samples, uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unif(0.01, 100.0);
  Json cases = Json::array();
  for (double a : {0.1, 0.5, 0.9}) {
    JacobianEnvelope env =
        JacobianEnvelope::from_vertices({bench::unit_radius2(a)});
    WeightSearch ws = find_weight(env, 0.0);
    int infeasible = 0;
    for (int k = 0; k < eta_samples; ++k) {
      Vector eta(2);
      eta << unif(rng), unif(rng);
      if (!check_weak_contractive(env, PositiveWeight(eta)).feasible) ++infeasible;
    }

    AffineOperator op(bench::unit_radius2(a), Vector::Zero(2));
    IterationConfig cfg(0.5, 200000, 1e-10, PositiveWeight(Vector::Ones(2)));
    Vector x0(2);
    x0 << 1.0, 1.0;
    IterationTrace trace = krasnoselskij(op, cfg, x0);
    Vector fix = trace.points.back();

    cases.push_back(Json{{"a", a},
                         {"tuned_weight_feasible", ws.feasible},
                         {"sampled_weights", eta_samples},
                         {"sampled_infeasible", infeasible},
                         {"averaged_converged", trace.converged},
                         {"fixed_point", vector_to_json(fix)},
                         {"fixed_point_residual",
                          (op.evaluate(fix) - fix).cwiseAbs().maxCoeff()}});
  }
  return Json{{"experiment", "counter"}, {"cases", std::move(cases)}};
}

Json run_stiff_experiment() {
  Matrix a = bench::stiff4();
  PositiveWeight eta(bench::stiff4_eta());
  JacobianEnvelope env = JacobianEnvelope::from_vertices({a});

  EwcCertificate cert = check_ewc(env, 4.0, 0.0, eta);
  StepSizePlan plan = krasnoselskij_plan(cert);
  SectorBounds identity_sector{1.0, 1.0};
  StepSizePlan baseline =
      monotone_baseline_plan(env, identity_sector, a.diagonal(), &eta);
  RateOptimum opt = optimize_rate(env, &eta);
  EwcCertificate opt_cert = check_ewc(env, opt.b, opt.c, eta);

  return Json{{"experiment", "stiff"},
              {"diag_lower", diag_lower(env)},
              {"certificate", certificate_to_json(cert, plan)},
              {"baseline", plan_to_json(baseline)},
              {"optimized",
               Json{{"b", opt.b},
                    {"c", opt.c},
                    {"rate", opt.rate},
                    {"plan", plan_to_json(krasnoselskij_plan(opt_cert))}}}};
}

Json run_affine_experiment(const std::string& trace_dir) {
  Matrix a = bench::affine4();
  const Index n = 4;
  JacobianEnvelope env = JacobianEnvelope::from_vertices({a});
  PositiveWeight ones(Vector::Ones(n));

  auto b_min = min_b(env, &ones);
  RateOptimum opt = optimize_rate(env, &ones);
  EwcCertificate opt_cert = check_ewc(env, opt.b, opt.c, ones);
  StepSizePlan opt_plan = krasnoselskij_plan(opt_cert);
  SectorBounds identity_sector{1.0, 1.0};
  StepSizePlan baseline =
      monotone_baseline_plan(env, identity_sector, a.diagonal(), &ones);

  Vector offset = -Vector::Ones(n);
  AffineOperator op(a, offset);
  Vector x_star =
      (Matrix::Identity(n, n) - a).fullPivLu().solve(offset);

  auto run_at = [&](double theta) {
    IterationConfig cfg(theta, 200000, 1e-10, ones);
    return krasnoselskij(op, cfg, Vector::Zero(n));
  };
  IterationTrace fast = run_at(0.59);
  IterationTrace slow = run_at(0.48);
  if (!trace_dir.empty()) {
    write_trace_csv_file(trace_dir + "/residuals_theta_0.59.csv", fast);
    write_trace_csv_file(trace_dir + "/residuals_theta_0.48.csv", slow);
  }

  Json runs = Json::array();
  runs.push_back(Json{{"theta", 0.59},
                      {"summary", trace_summary_json(fast)},
                      {"steps_to_1e-8", fast.iterations_to_tolerance(1e-8)},
                      {"rate_bound_verified",
                       verify_contraction_rate(fast, x_star, 0.83, ones)}});
  runs.push_back(Json{{"theta", 0.48},
                      {"summary", trace_summary_json(slow)},
                      {"steps_to_1e-8", slow.iterations_to_tolerance(1e-8)},
                      {"rate_bound_verified",
                       verify_contraction_rate(slow, x_star, 0.86, ones)}});

  Json j{{"experiment", "affine"},
         {"min_b_unit_weight", b_min ? Json(*b_min) : Json(nullptr)},
         {"optimized", certificate_to_json(opt_cert, opt_plan)},
         {"baseline", plan_to_json(baseline)},
         {"fixed_point", vector_to_json(x_star)},
         {"runs", std::move(runs)}};
  return j;
}

Json run_mix_experiment() {
  Matrix a = bench::mix5();
  SectorBounds sector{0.1, 1.0};
  JacobianEnvelope env = sector_envelope(a, sector);
  PositiveWeight eta(bench::mix5_eta());
  EwcCertificate cert = check_ewc(env, 0.537, 0.324, eta);
  StepSizePlan plan = krasnoselskij_plan(cert);
  return Json{{"experiment", "mix"},
              {"certificate", certificate_to_json(cert, plan)}};
}

Json run_consensus_demo(uint64_t seed, const std::string& trace_csv_path) {
  std::mt19937_64 rng(splitmix64(seed ^ 0xC0115E75ull));
  const Index n = 8;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix adj = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) adj(i, (i + 1) % n) = 1.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && unif(rng) < 0.25) adj(i, j) = 1.0;
  Digraph graph(adj);

  std::uniform_real_distribution<double> alpha(0.1, 0.9);
  std::vector<EdgeRule> rules;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (graph.has_edge(i, j))
        rules.push_back(EdgeRule{i, j, ScalarFunction::make_leaky_relu(alpha(rng))});

  NonlinearLaplacianOperator op = build_mas_operator(graph, rules);
  double theta = 0.9 * consensus_step_bound(graph, op.max_edge_lipschitz());
  MasModel model = make_mas_model(graph, rules, theta);

  std::uniform_real_distribution<double> state(-2.0, 2.0);
  Vector x0(n);
  for (Index i = 0; i < n; ++i) x0[i] = state(rng);

  ConsensusRun run = simulate_consensus(model, x0, 100000);
  if (!trace_csv_path.empty()) write_trace_csv_file(trace_csv_path, run.trace);

  Json j{{"experiment", "consensus"},
         {"agents", n},
         {"edges", graph.edge_count()},
         {"globally_reachable", has_globally_reachable_node(graph)},
         {"theta", theta},
         {"steps", run.trace.step_residuals.size()},
         {"final_gap", run.final_gap}};
  j["value"] = run.value ? Json(*run.value) : Json(nullptr);
  return j;
}

Json run_dnl_sweep_experiment(const DnlSweepConfig& cfg, const std::string& csv_path) {
  DnlSweepResult result = sweep_dnl(cfg);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot open " + csv_path + " for writing");
    write_dnl_csv(out, result);
  }
  Json j = dnl_summary_json(result);
  j["experiment"] = "rate_ratio_sweep";
  return j;
}

}  // namespace ewc
