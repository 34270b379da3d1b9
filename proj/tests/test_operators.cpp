#include <doctest.h>

#include <cmath>

#include "ewc/matnorm.hpp"
#include "ewc/operators.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using ewc::AffineOperator;
using ewc::DiagNonlinAffineOperator;
using ewc::Index;
using ewc::Matrix;
using ewc::PositiveWeight;
using ewc::ScalarFunction;
using ewc::Vector;

using fixture::bench_affine4;

TEST_CASE("leaky_relu branches") {
  CHECK(ewc::leaky_relu(5.0, 0.1) == doctest::Approx(5.0));
  CHECK(ewc::leaky_relu(-5.0, 0.1) == doctest::Approx(-0.5));
  CHECK(ewc::leaky_relu(0.0, 0.7) == 0.0);
  CHECK(ewc::leaky_relu(-2.0, 1.0) == doctest::Approx(-2.0));
  CHECK(ewc::leaky_relu(-2.0, 0.0) == 0.0);
  CHECK_THROWS_AS(ewc::leaky_relu(1.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(ewc::leaky_relu(1.0, -0.1), std::invalid_argument);
}

TEST_CASE("scalar function kinds evaluate and report slopes") {
  auto id = ScalarFunction::identity();
  CHECK(id(3.5) == 3.5);
  CHECK(id.slope_range().d1 == 1.0);
  CHECK(id.fixes_zero());

  auto lin = ScalarFunction::linear(-2.0);
  CHECK(lin(3.0) == doctest::Approx(-6.0));
  CHECK(lin.lipschitz() == doctest::Approx(2.0));

  auto lr = ScalarFunction::make_leaky_relu(0.1);
  CHECK(lr(-5.0) == doctest::Approx(-0.5));
  CHECK(lr(5.0) == doctest::Approx(5.0));
  CHECK(lr.slope_range().d1 == doctest::Approx(0.1));
  CHECK(lr.slope_range().d2 == doctest::Approx(1.0));
  CHECK(lr.min_slope_at_zero() == doctest::Approx(0.1));

  auto mlr = ScalarFunction::make_min_leaky_relu(0.3);
  CHECK(mlr(-2.0) == doctest::Approx(-2.0));
  CHECK(mlr(2.0) == doctest::Approx(0.6));
  CHECK(mlr.slope_range().d2 == doctest::Approx(1.0));
}

TEST_CASE("piecewise linear interpolates knots and extends end slopes") {
  auto pw = ScalarFunction::piecewise_linear({-1.0, 0.0, 2.0}, {-0.5, 0.0, 4.0});
  CHECK(pw(-1.0) == doctest::Approx(-0.5));
  CHECK(pw(0.0) == 0.0);
  CHECK(pw(1.0) == doctest::Approx(2.0));
  CHECK(pw(2.0) == doctest::Approx(4.0));
  // Extensions reuse the adjacent segment slopes.
  CHECK(pw(-3.0) == doctest::Approx(-1.5));
  CHECK(pw(4.0) == doctest::Approx(8.0));
  CHECK(pw.slope_range().d1 == doctest::Approx(0.5));
  CHECK(pw.slope_range().d2 == doctest::Approx(2.0));
  // Zero sits on a knot, so both neighboring slopes count.
  CHECK(pw.min_slope_at_zero() == doctest::Approx(0.5));
  CHECK(pw.fixes_zero());

  CHECK_THROWS_AS(ScalarFunction::piecewise_linear({0.0, 0.0}, {0.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ScalarFunction::piecewise_linear({0.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("affine operator evaluates and exposes a one-vertex envelope") {
  AffineOperator id(Matrix::Identity(2, 2), Vector::Zero(2));
  Vector x(2);
  x << 1.0, 2.0;
  CHECK(id.evaluate(x).isApprox(x));

  auto env = id.jacobian_envelope();
  CHECK(env.vertices().size() == 1);
  CHECK(env.vertices()[0].isApprox(Matrix::Identity(2, 2)));

  Vector bad(3);
  bad.setZero();
  CHECK_THROWS_AS(id.evaluate(bad), std::invalid_argument);
}

TEST_CASE("the four-dimensional affine benchmark keeps its fixed point") {
  AffineOperator op(bench_affine4(), -Vector::Ones(4));
  Vector x_star(4);
  x_star << 0.04, -2.14, -0.25, -1.76;
  CHECK((op.evaluate(x_star) - x_star).cwiseAbs().maxCoeff() < 0.02);

  Vector exact = oracle::affine_fixed_point(bench_affine4(), -Vector::Ones(4));
  CHECK((exact - x_star).cwiseAbs().maxCoeff() < 0.02);
  CHECK(op.evaluate(exact).isApprox(exact, 1e-10));
}

TEST_CASE("diagonal nonlinearity composed with identity matches the scalar map") {
  DiagNonlinAffineOperator op(Matrix::Identity(2, 2), Vector::Zero(2),
                              ScalarFunction::make_leaky_relu(0.1));
  Vector x(2);
  x << -1.0, 2.0;
  Vector y = op.evaluate(x);
  CHECK(y[0] == doctest::Approx(-0.1));
  CHECK(y[1] == doctest::Approx(2.0));

  auto env = op.jacobian_envelope();
  CHECK(env.vertices().size() == 2);
  CHECK(env.vertices()[0].isApprox(Matrix(0.1 * Matrix::Identity(2, 2))));
  CHECK(env.vertices()[1].isApprox(Matrix::Identity(2, 2)));
}

TEST_CASE("sector spot check rejects a lying sector") {
  CHECK_THROWS_AS(DiagNonlinAffineOperator(Matrix::Identity(2, 2), Vector::Zero(2),
                                           ScalarFunction::make_leaky_relu(0.1),
                                           ewc::SectorBounds{0.5, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("finite-difference Jacobians lie in the declared row hull") {
  auto rng = oracle::make_rng(211);
  for (int t = 0; t < 25; ++t) {
    Index n = 2 + static_cast<Index>(t % 5);
    Matrix a = oracle::random_matrix(rng, n, n, -2.0, 2.0);
    Vector offset = oracle::random_vector(rng, n, -1.0, 1.0);
    double alpha = 0.1 + 0.8 * (t % 7) / 7.0;
    DiagNonlinAffineOperator op(a, offset, ScalarFunction::make_leaky_relu(alpha));
    auto fn = [&](const Vector& x) { return op.evaluate(x); };

    Vector x = oracle::random_vector(rng, n, -3.0, 3.0);
    // Keep the differencing away from activation kinks.
    Vector z = a * x + offset;
    if (z.cwiseAbs().minCoeff() < 1e-3) continue;
    Matrix j = oracle::fd_jacobian(fn, x);
    for (Index i = 0; i < n; ++i) {
      // Each row is a single slope times the matching row of A.
      Index jmax;
      a.row(i).cwiseAbs().maxCoeff(&jmax);
      double slope = j(i, jmax) / a(i, jmax);
      CHECK(slope >= alpha - 1e-5);
      CHECK(slope <= 1.0 + 1e-5);
      CHECK((j.row(i) - slope * a.row(i)).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("envelope worst case equals the sampled-Jacobian supremum") {
  auto rng = oracle::make_rng(223);
  for (int t = 0; t < 10; ++t) {
    Index n = 2 + static_cast<Index>(t % 4);
    Matrix a = oracle::random_matrix(rng, n, n, -2.0, 2.0);
    Vector offset = oracle::random_vector(rng, n, -0.5, 0.5);
    double alpha = 0.2;
    DiagNonlinAffineOperator op(a, offset, ScalarFunction::make_leaky_relu(alpha));
    Vector eta = oracle::random_positive_vector(rng, n);
    double b = std::abs(oracle::random_vector(rng, 1, 0.0, 2.0)[0]);
    Vector worst = ewc::worst_abs_row_sums(op.jacobian_envelope(), b, eta);

    Vector sampled = Vector::Zero(n);
    for (int s = 0; s < 400; ++s) {
      Vector x = oracle::random_vector(rng, n, -4.0, 4.0);
      Vector z = a * x + offset;
      Matrix j(n, n);
      for (Index i = 0; i < n; ++i)
        j.row(i) = (z[i] >= 0.0 ? 1.0 : alpha) * a.row(i);
      j.diagonal().array() += b;
      sampled = sampled.cwiseMax(j.cwiseAbs() * eta);
    }
    for (Index i = 0; i < n; ++i) {
      CHECK(sampled[i] <= worst[i] + 1e-8);
      CHECK(sampled[i] == doctest::Approx(worst[i]).epsilon(1e-8));
    }
  }
}

TEST_CASE("evaluation is Lipschitz with the envelope constant") {
  auto rng = oracle::make_rng(227);
  for (int t = 0; t < 40; ++t) {
    Index n = 2 + static_cast<Index>(t % 5);
    Matrix a = oracle::random_matrix(rng, n, n, -2.0, 2.0);
    Vector offset = oracle::random_vector(rng, n, -1.0, 1.0);
    DiagNonlinAffineOperator op(a, offset, ScalarFunction::make_leaky_relu(0.3));
    Vector eta_raw = oracle::random_positive_vector(rng, n);
    PositiveWeight eta(eta_raw);
    Vector worst = ewc::worst_abs_row_sums(op.jacobian_envelope(), 0.0, eta_raw);
    double lhat = (worst.cwiseQuotient(eta_raw)).maxCoeff();

    Vector x = oracle::random_vector(rng, n, -3.0, 3.0);
    Vector y = oracle::random_vector(rng, n, -3.0, 3.0);
    double lhs = ewc::weighted_inf_norm(op.evaluate(x) - op.evaluate(y), eta);
    double rhs = lhat * ewc::weighted_inf_norm(x - y, eta);
    CHECK(lhs <= rhs + 1e-10);
  }
}
