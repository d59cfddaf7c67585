#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>

#include "doctest.h"
#include "streamgp/optimizer.hpp"
#include "test_util.hpp"

using namespace streamgp;
using namespace streamgp::test;

namespace {

// Convex quadratic 1/2 x^T A x - b^T x with a known minimizer A^{-1} b.
struct Quadratic {
  Matrix a;
  Vector b;
  double operator()(const Vector& x, Vector& grad) const {
    grad = a * x - b;
    return 0.5 * x.dot(a * x) - b.dot(x);
  }
};

double rosenbrock(const Vector& x, Vector& grad) {
  const double u = x(0), v = x(1);
  grad.resize(2);
  grad(0) = -400.0 * u * (v - u * u) - 2.0 * (1.0 - u);
  grad(1) = 200.0 * (v - u * u);
  return 100.0 * std::pow(v - u * u, 2) + std::pow(1.0 - u, 2);
}

}  // namespace

TEST_CASE("minimize solves a convex quadratic to the exact optimum") {
  NormalRng rng(5);
  const Matrix m = random_matrix(rng, 6, 6);
  Quadratic q{m * m.transpose() + 3.0 * Matrix::Identity(6, 6),
              random_vector(rng, 6)};
  const Vector expected = q.a.ldlt().solve(q.b);

  OptimizerConfig config;
  const OptimizationResult result =
      minimize([&](const Vector& x, Vector& g) { return q(x, g); },
               Vector::Zero(6), config);

  CHECK(result.converged);
  CHECK(result.termination_reason == TerminationReason::gradient_small);
  CHECK((result.best_point - expected).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(result.best_value <=
        0.5 * expected.dot(q.a * expected) - q.b.dot(expected) + 1e-8);
}

TEST_CASE("minimize handles the Rosenbrock valley") {
  OptimizerConfig config;
  config.max_iterations = 500;
  config.gradient_tolerance = 1e-7;
  Vector start(2);
  start << -1.2, 1.0;
  const OptimizationResult result = minimize(rosenbrock, start, config);

  CHECK(result.best_value < 1e-10);
  CHECK(result.best_point(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(result.best_point(1) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("iteration budget is honored and the best iterate is kept") {
  OptimizerConfig config;
  config.max_iterations = 3;
  Vector start(2);
  start << -1.2, 1.0;
  const OptimizationResult result = minimize(rosenbrock, start, config);

  CHECK(result.iterations_used <= 3);
  CHECK_FALSE(result.converged);
  CHECK(result.termination_reason == TerminationReason::max_iterations);
  Vector g(2);
  CHECK(result.best_value <= rosenbrock(start, g));
  CHECK(std::isfinite(result.best_value));
}

TEST_CASE("line search retreats from a non-finite region") {
  // Quadratic bowl with an infinite wall at x > 4; the descent path from the
  // start never needs to cross it, but long trial steps will probe it.
  auto objective = [](const Vector& x, Vector& grad) {
    if (x(0) > 4.0) {
      grad = Vector::Zero(1);
      return std::numeric_limits<double>::infinity();
    }
    grad.resize(1);
    grad(0) = 2.0 * (x(0) - 3.0);
    return (x(0) - 3.0) * (x(0) - 3.0);
  };
  Vector start(1);
  start << -20.0;
  const OptimizationResult result = minimize(objective, start, OptimizerConfig());
  CHECK(result.best_point(0) == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(std::isfinite(result.best_value));
}

TEST_CASE("a flat objective terminates immediately") {
  auto objective = [](const Vector& x, Vector& grad) {
    grad = Vector::Zero(x.size());
    return 7.0;
  };
  const OptimizationResult result =
      minimize(objective, Vector::Zero(3), OptimizerConfig());
  CHECK(result.converged);
  CHECK(result.best_value == 7.0);
  CHECK(result.iterations_used == 0);
}

TEST_CASE("non-finite start is rejected") {
  Vector start(2);
  start << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(minimize(rosenbrock, start, OptimizerConfig()),
                  std::invalid_argument);
}

TEST_CASE("config validation rejects nonsense settings") {
  OptimizerConfig config;
  config.max_iterations = -1;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  config = OptimizerConfig();
  config.wolfe_c1 = 0.95;
  config.wolfe_c2 = 0.5;  // needs c1 < c2
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  config = OptimizerConfig();
  config.gradient_tolerance = -1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("check_gradient flags a wrong gradient and accepts a right one") {
  NormalRng rng(9);
  const Matrix m = random_matrix(rng, 4, 4);
  Quadratic q{m * m.transpose() + 2.0 * Matrix::Identity(4, 4),
              random_vector(rng, 4)};
  const Vector point = random_vector(rng, 4);

  const double good = check_gradient(
      [&](const Vector& x, Vector& g) { return q(x, g); }, point, 1e-5);
  CHECK(good < 1e-6);

  const double bad = check_gradient(
      [&](const Vector& x, Vector& g) {
        const double v = q(x, g);
        g(0) += 0.5;  // corrupt one component
        return v;
      },
      point, 1e-5);
  CHECK(bad > 1e-2);
}

TEST_CASE("minimize is deterministic") {
  Vector start(2);
  start << -1.2, 1.0;
  const OptimizationResult a = minimize(rosenbrock, start, OptimizerConfig());
  const OptimizationResult b = minimize(rosenbrock, start, OptimizerConfig());
  CHECK(a.best_value == b.best_value);
  CHECK((a.best_point - b.best_point).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.iterations_used == b.iterations_used);
}
