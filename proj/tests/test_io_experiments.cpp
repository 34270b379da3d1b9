#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ewc/consensus.hpp"
#include "ewc/experiments.hpp"
#include "ewc/io.hpp"
#include "ewc/iterate.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using ewc::Index;
using ewc::JacobianEnvelope;
using ewc::Json;
using ewc::Matrix;
using ewc::PositiveWeight;
using ewc::SectorBounds;
using ewc::Vector;

TEST_CASE("matrix and vector json round trips") {
  Matrix m = fixture::bench_affine4();
  Json j = ewc::matrix_to_json(m);
  CHECK(j["rows"] == 4);
  CHECK(j["cols"] == 4);
  Matrix back = ewc::matrix_from_json(j);
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);

  Vector v = fixture::stiff4_eta();
  Vector vb = ewc::vector_from_json(ewc::vector_to_json(v));
  CHECK((vb - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("malformed json is rejected with context") {
  Json no_data{{"rows", 2}, {"cols", 2}};
  CHECK_THROWS_AS(ewc::matrix_from_json(no_data), std::runtime_error);

  Json short_data{{"rows", 2}, {"cols", 2}, {"data", Json::array({1.0, 2.0})}};
  CHECK_THROWS_AS(ewc::matrix_from_json(short_data), std::runtime_error);

  CHECK_THROWS_AS(ewc::vector_from_json(Json{{"a", 1}}), std::runtime_error);
  CHECK_THROWS_AS(ewc::activation_from_json(Json{{"name", "tanh"}}), std::runtime_error);
  CHECK_THROWS_AS(ewc::activation_from_json(Json{{"name", "lrelu"}}), std::runtime_error);
}

TEST_CASE("operator specs load and evaluate") {
  Json affine{{"type", "affine"},
              {"matrix", ewc::matrix_to_json(fixture::bench_affine4())},
              {"offset", ewc::vector_to_json(-Vector::Ones(4))}};
  auto op = ewc::operator_from_json(affine);
  Vector x = Vector::Zero(4);
  CHECK((op->evaluate(x) + Vector::Ones(4)).cwiseAbs().maxCoeff() == 0.0);

  Json dnl{{"type", "diag_nonlin_affine"},
           {"matrix", ewc::matrix_to_json(fixture::mix5())},
           {"offset", ewc::vector_to_json(Vector::Zero(5))},
           {"activation", Json{{"name", "lrelu"}, {"alpha", 0.1}}}};
  auto op2 = ewc::operator_from_json(dnl);
  CHECK(op2->dim() == 5);
  JacobianEnvelope env = op2->jacobian_envelope();
  CHECK(env.vertices().size() == 2);

  Json unknown{{"type", "mystery"}};
  CHECK_THROWS_AS(ewc::operator_from_json(unknown), std::runtime_error);
}

TEST_CASE("mas specs load with uniform or per-edge rules") {
  Matrix adj = Matrix::Zero(2, 2);
  adj(0, 1) = adj(1, 0) = 1.0;
  Json uniform{{"type", "mas"},
               {"adjacency", ewc::matrix_to_json(adj)},
               {"theta", 0.25},
               {"rule", Json{{"name", "identity"}}}};
  ewc::MasModel model = ewc::mas_model_from_json(uniform);
  CHECK(model.theta == 0.25);
  Vector x(2);
  x << 3.0, -1.0;
  CHECK(model.op.evaluate(x)[0] == -1.0);

  Json per_edge{{"type", "mas"},
                {"adjacency", ewc::matrix_to_json(adj)},
                {"theta", 0.25},
                {"rules", Json::array({Json{{"i", 0}, {"j", 1}, {"name", "lrelu"}, {"alpha", 0.5}},
                                       Json{{"i", 1}, {"j", 0}, {"name", "lrelu"}, {"alpha", 0.2}}})}};
  ewc::MasModel model2 = ewc::mas_model_from_json(per_edge);
  CHECK(model2.op.rule(0, 1).lipschitz() == doctest::Approx(1.0));

  auto op3 = ewc::operator_from_json(per_edge);
  CHECK(op3->dim() == 2);
}

TEST_CASE("trace csv has the header, seed row, and residual column") {
  ewc::AffineOperator op(0.5 * Matrix::Identity(2, 2), Vector::Zero(2));
  ewc::IterationConfig cfg(0.5, 5, 0.0, PositiveWeight(Vector::Ones(2)));
  ewc::IterationTrace trace = ewc::krasnoselskij(op, cfg, Vector::Ones(2));

  std::ostringstream out;
  ewc::write_trace_csv(out, trace);
  std::istringstream lines(out.str());
  std::string header, row0, row1;
  std::getline(lines, header);
  std::getline(lines, row0);
  std::getline(lines, row1);
  CHECK(header == "k,x_1,x_2,residual");
  CHECK(row0.substr(0, 2) == "0,");
  CHECK(row0.find("nan") != std::string::npos);
  CHECK(row1.substr(0, 2) == "1,");
  CHECK(row1.find("nan") == std::string::npos);

  int rows = 2;
  std::string rest;
  while (std::getline(lines, rest)) ++rows;
  CHECK(rows == static_cast<int>(trace.points.size()));
}

TEST_CASE("certificate and plan json carry the step fields") {
  JacobianEnvelope env = JacobianEnvelope::from_vertices({fixture::stiff4()});
  PositiveWeight eta(fixture::stiff4_eta());
  ewc::EwcCertificate cert = ewc::check_ewc(env, 4.0, 0.0, eta);
  ewc::StepSizePlan plan = ewc::krasnoselskij_plan(cert);
  Json j = ewc::certificate_to_json(cert, plan);
  CHECK(j["b"] == 4.0);
  CHECK(j["feasible"] == true);
  CHECK(j["theta_max"] == doctest::Approx(0.2));
  CHECK(j["source"] == "shift_certificate");
  CHECK(j["eta"].size() == 4);
}

TEST_CASE("emitted certificates re-validate on reload") {
  JacobianEnvelope env = JacobianEnvelope::from_vertices({fixture::stiff4()});
  PositiveWeight eta(fixture::stiff4_eta());
  ewc::EwcCertificate cert = ewc::check_ewc(env, 4.0, 0.0, eta);
  Json j = ewc::certificate_to_json(cert, ewc::krasnoselskij_plan(cert));

  ewc::EwcCertificate back =
      ewc::check_ewc(env, j["b"].get<double>(), j["c"].get<double>(),
                     PositiveWeight(ewc::vector_from_json(j["eta"])));
  CHECK(back.feasible == j["feasible"].get<bool>());
  CHECK(back.residual == doctest::Approx(j["residual"].get<double>()).epsilon(1e-12));

  JacobianEnvelope bench = JacobianEnvelope::from_vertices({fixture::bench_affine4()});
  ewc::RateOptimum opt = ewc::optimize_rate(bench);
  Json jo = ewc::certificate_to_json(ewc::check_ewc(bench, opt.b, opt.c, opt.eta));
  ewc::EwcCertificate back2 =
      ewc::check_ewc(bench, jo["b"].get<double>(), jo["c"].get<double>(),
                     PositiveWeight(ewc::vector_from_json(jo["eta"])));
  CHECK(back2.feasible);
}

TEST_CASE("instance generator hits its structural targets") {
  auto rng = oracle::make_rng(113);
  SectorBounds sector{0.1, 1.0};
  for (int rep = 0; rep < 60; ++rep) {
    Index n = 3 + static_cast<Index>(rep % 5);
    double c_target = 0.2 + 0.3 * (rep % 7);
    Matrix a = ewc::generate_dnl_matrix(n, c_target, sector, rng);
    double gamma = 0.05 * (1.0 + c_target);

    CHECK(a.diagonal().minCoeff() <= 0.0);
    for (Index i = 0; i < n; ++i)
      CHECK(std::max(sector.d1 * a(i, i), sector.d2 * a(i, i)) <=
            1.0 - c_target - gamma + 1e-12);

    // Collatz-Wielandt certificate: a positive eta whose shifted quotient
    // stays below the cap proves the joint Metzler root does too.
    JacobianEnvelope env =
        JacobianEnvelope::from_vertices({sector.d1 * a, sector.d2 * a});
    const double s = 1.0 + std::max(0.0, ewc::diag_lower(env));
    auto apply = [&](const Vector& v) -> Vector {
      return ewc::worst_metzler_row_sums(env, v) + s * v;
    };
    ewc::PerronResult pr = ewc::perron_of_map(apply, n);
    Vector eta = pr.v.cwiseMax(1e-8 * pr.v.maxCoeff());
    double root = (apply(eta).cwiseQuotient(eta)).maxCoeff() - s;
    CHECK(root <= 1.0 - c_target - 0.5 * gamma + 1e-9);
  }
}

TEST_CASE("instance generator is reproducible") {
  SectorBounds sector{0.1, 1.0};
  std::mt19937_64 a_rng(ewc::splitmix64(99));
  std::mt19937_64 b_rng(ewc::splitmix64(99));
  Matrix a = ewc::generate_dnl_matrix(6, 1.0, sector, a_rng);
  Matrix b = ewc::generate_dnl_matrix(6, 1.0, sector, b_rng);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("small sweep keeps every ratio at or below one") {
  ewc::DnlSweepConfig cfg;
  cfg.sizes = {4, 6};
  cfg.trials = 3;
  cfg.c_grid = {0.2, 1.0};
  cfg.seed = 7;
  ewc::DnlSweepResult result = ewc::sweep_dnl(cfg);
  CHECK(result.rows.size() + result.skipped == 12);
  CHECK(result.skipped == 0);
  for (const ewc::DnlRatioRow& r : result.rows) {
    CHECK(r.ratio <= 1.0 + 1e-6);
    CHECK(r.ratio > 0.0);
    CHECK(r.rate_baseline > 0.0);
    CHECK(r.rate_baseline < 1.0);
  }

  std::ostringstream csv;
  ewc::write_dnl_csv(csv, result);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "n,c_target,trial,rate_opt,rate_baseline,ratio");
  int rows = 0;
  std::string row;
  while (std::getline(lines, row)) ++rows;
  CHECK(rows == static_cast<int>(result.rows.size()));

  Json summary = ewc::dnl_summary_json(result);
  CHECK(summary["rows"] == result.rows.size());
  CHECK(summary["max_ratio"].get<double>() <= 1.0 + 1e-6);
  CHECK(summary["mean_ratio_by_target"].size() == 2);
}

TEST_CASE("experiment runners return coherent summaries") {
  Json counter = ewc::run_counter_experiment(40, 5);
  CHECK(counter["cases"].size() == 3);
  for (const Json& c : counter["cases"]) {
    CHECK(c["tuned_weight_feasible"] == false);
    CHECK(c["sampled_infeasible"] == c["sampled_weights"]);
    CHECK(c["averaged_converged"] == true);
    CHECK(c["fixed_point_residual"].get<double>() <= 1e-9);
  }

  Json stiff = ewc::run_stiff_experiment();
  CHECK(stiff["diag_lower"] == doctest::Approx(7.5));
  CHECK(stiff["certificate"]["theta_max"] == doctest::Approx(0.2));
  CHECK(stiff["certificate"]["feasible"] == true);
  CHECK(stiff["baseline"]["theta_max"] == doctest::Approx(1.0 / 8.5));
  CHECK(stiff["optimized"]["b"].get<double>() == doctest::Approx(4.006).epsilon(2e-2));

  Json affine = ewc::run_affine_experiment();
  CHECK(affine["min_b_unit_weight"].get<double>() == doctest::Approx(0.55).epsilon(1e-3));
  CHECK(affine["optimized"]["theta_star"].get<double>() ==
        doctest::Approx(0.59).epsilon(2e-2));
  CHECK(affine["runs"][0]["rate_bound_verified"] == true);
  CHECK(affine["runs"][1]["rate_bound_verified"] == true);
  CHECK(affine["runs"][0]["steps_to_1e-8"].get<int>() <
        affine["runs"][1]["steps_to_1e-8"].get<int>());

  Json mix = ewc::run_mix_experiment();
  CHECK(mix["certificate"]["feasible"] == true);
  CHECK(mix["certificate"]["residual"].get<double>() <= 2e-2);

  Json consensus = ewc::run_consensus_demo(11, "");
  CHECK(consensus["globally_reachable"] == true);
  CHECK(consensus["final_gap"].get<double>() <= 1e-8);
  CHECK_FALSE(consensus["value"].is_null());
}
