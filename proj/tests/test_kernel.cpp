#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "streamgp/kernel.hpp"
#include "streamgp/linalg.hpp"
#include "test_util.hpp"

using namespace streamgp;
using namespace streamgp::test;

namespace {

Hyperparameters unit_hp(Index d) {
  return Hyperparameters(0.0, Vector::Zero(d), 0.0);
}

constexpr double kExpHalf = 0.60653065971263342;  // exp(-1/2)
constexpr double kExpOne = 0.36787944117144233;   // exp(-1)

}  // namespace

TEST_CASE("kernel_eval matches hand-computed values") {
  const Hyperparameters hp = unit_hp(2);
  Vector a(2), b(2);
  a << 0.0, 0.0;

  b << 0.0, 0.0;
  CHECK(kernel_eval(a, b, hp) == doctest::Approx(1.0).epsilon(1e-14));

  b << 1.0, 0.0;
  CHECK(kernel_eval(a, b, hp) == doctest::Approx(kExpHalf).epsilon(1e-14));

  b << 1.0, 1.0;
  CHECK(kernel_eval(a, b, hp) == doctest::Approx(kExpOne).epsilon(1e-14));

  // Scaling the signal variance scales every value; lengthscale 2 in the
  // moved coordinate turns a displacement of 2 back into a unit distance.
  Hyperparameters scaled = Hyperparameters::from_values(
      3.0, (Vector(2) << 2.0, 1.0).finished(), 0.5);
  b << 2.0, 0.0;
  CHECK(kernel_eval(a, b, scaled) ==
        doctest::Approx(3.0 * kExpHalf).epsilon(1e-14));
}

TEST_CASE("kernel is anisotropic per dimension") {
  Hyperparameters hp = Hyperparameters::from_values(
      1.0, (Vector(2) << 0.5, 2.0).finished(), 0.1);
  Vector a(2), b1(2), b2(2);
  a << 0.0, 0.0;
  b1 << 1.0, 0.0;
  b2 << 0.0, 1.0;
  const double k1 = kernel_eval(a, b1, hp);
  const double k2 = kernel_eval(a, b2, hp);
  CHECK(k1 == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(k2 == doctest::Approx(std::exp(-0.125)).epsilon(1e-14));
  CHECK(k1 < k2);
}

TEST_CASE("kernel_matrix is symmetric with sf2 diagonal") {
  NormalRng rng(42);
  const Matrix x = random_matrix(rng, 9, 3);
  const Hyperparameters hp = random_hyperparameters(rng, 3);
  const Matrix k = kernel_matrix(x, x, hp);

  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  for (Index i = 0; i < x.rows(); ++i) {
    CHECK(k(i, i) == doctest::Approx(hp.signal_variance()).epsilon(1e-14));
    for (Index j = 0; j < x.rows(); ++j) {
      CHECK(k(i, j) ==
            doctest::Approx(kernel_eval(x.row(i), x.row(j), hp))
                .epsilon(1e-14));
      CHECK(k(i, j) <= hp.signal_variance() + 1e-14);
      CHECK(k(i, j) > 0.0);
    }
  }

  const Vector d = kernel_diag(x, hp);
  CHECK((d - k.diagonal()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("kernel_matrix of distinct points is positive definite") {
  NormalRng rng(7);
  const Matrix x = random_matrix(rng, 14, 2);
  const Hyperparameters hp = unit_hp(2);
  const Matrix k = kernel_matrix(x, x, hp);
  const CholeskyFactor chol = robust_cholesky(k);
  const Matrix rebuilt = chol.lower * chol.lower.transpose();
  Matrix target = k;
  target.diagonal().array() += chol.jitter;
  CHECK((rebuilt - target).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("kernel_gradients match central differences") {
  NormalRng rng(3);
  const Matrix x1 = random_matrix(rng, 6, 2);
  const Matrix x2 = random_matrix(rng, 5, 2);
  const Hyperparameters hp = random_hyperparameters(rng, 2);
  const std::vector<Matrix> grads = kernel_gradients(x1, x2, hp);
  REQUIRE(grads.size() == 3);  // log sf2 plus two log lengthscales

  const double h = 1e-6;
  Vector theta = hp.to_vector();
  for (std::size_t p = 0; p < grads.size(); ++p) {
    Vector tp = theta, tm = theta;
    tp(static_cast<Index>(p)) += h;
    tm(static_cast<Index>(p)) -= h;
    const Matrix fd = (kernel_matrix(x1, x2, Hyperparameters::from_vector(tp)) -
                       kernel_matrix(x1, x2, Hyperparameters::from_vector(tm))) /
                      (2.0 * h);
    CHECK((grads[p] - fd).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("kernel_hyper_contract matches differentiating a contraction") {
  NormalRng rng(11);
  const Matrix x1 = random_matrix(rng, 7, 3);
  const Matrix x2 = random_matrix(rng, 4, 3);
  const Matrix adj = random_matrix(rng, 7, 4);
  const Hyperparameters hp = random_hyperparameters(rng, 3);
  const Matrix k = kernel_matrix(x1, x2, hp);
  const Vector got = kernel_hyper_contract(x1, x2, k, adj, hp);
  REQUIRE(got.size() == 4);

  const double h = 1e-6;
  const Vector theta = hp.to_vector();
  for (Index p = 0; p < got.size(); ++p) {
    Vector tp = theta, tm = theta;
    tp(p) += h;
    tm(p) -= h;
    const double fp =
        adj.cwiseProduct(kernel_matrix(x1, x2, Hyperparameters::from_vector(tp)))
            .sum();
    const double fm =
        adj.cwiseProduct(kernel_matrix(x1, x2, Hyperparameters::from_vector(tm)))
            .sum();
    CHECK(got(p) == doctest::Approx((fp - fm) / (2.0 * h)).epsilon(1e-6));
  }
}

TEST_CASE("kernel input gradients match central differences") {
  NormalRng rng(19);
  const Matrix x1 = random_matrix(rng, 5, 2);
  const Matrix x2 = random_matrix(rng, 6, 2);
  const Matrix adj = random_matrix(rng, 5, 6);
  const Hyperparameters hp = random_hyperparameters(rng, 2);
  const Matrix k = kernel_matrix(x1, x2, hp);

  const Matrix g1 = kernel_input_grad_first(x1, x2, k, adj, hp);
  const Matrix g2 = kernel_input_grad_second(x1, x2, k, adj, hp);
  REQUIRE(g1.rows() == 5);
  REQUIRE(g2.rows() == 6);

  const double h = 1e-6;
  auto contract = [&](const Matrix& a, const Matrix& b) {
    return adj.cwiseProduct(kernel_matrix(a, b, hp)).sum();
  };
  for (Index i = 0; i < x1.rows(); ++i) {
    for (Index d = 0; d < x1.cols(); ++d) {
      Matrix xp = x1, xm = x1;
      xp(i, d) += h;
      xm(i, d) -= h;
      const double fd = (contract(xp, x2) - contract(xm, x2)) / (2.0 * h);
      CHECK(g1(i, d) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  for (Index j = 0; j < x2.rows(); ++j) {
    for (Index d = 0; d < x2.cols(); ++d) {
      Matrix xp = x2, xm = x2;
      xp(j, d) += h;
      xm(j, d) -= h;
      const double fd = (contract(x1, xp) - contract(x1, xm)) / (2.0 * h);
      CHECK(g2(j, d) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("kernel_input_grad_sym handles an asymmetric adjoint") {
  NormalRng rng(23);
  const Matrix x = random_matrix(rng, 6, 2);
  const Matrix adj = random_matrix(rng, 6, 6);  // deliberately not symmetric
  const Hyperparameters hp = random_hyperparameters(rng, 2);
  const Matrix k = kernel_matrix(x, x, hp);
  const Matrix g = kernel_input_grad_sym(x, k, adj, hp);

  const double h = 1e-6;
  auto contract = [&](const Matrix& z) {
    return adj.cwiseProduct(kernel_matrix(z, z, hp)).sum();
  };
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index d = 0; d < x.cols(); ++d) {
      Matrix xp = x, xm = x;
      xp(i, d) += h;
      xm(i, d) -= h;
      const double fd = (contract(xp) - contract(xm)) / (2.0 * h);
      CHECK(g(i, d) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("robust_cholesky factors a well-conditioned matrix without jitter") {
  Matrix a(2, 2);
  a << 4.0, 2.0, 2.0, 3.0;
  const CholeskyFactor chol = robust_cholesky(a);
  CHECK(chol.jitter == 0.0);
  CHECK(chol.lower(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(chol.lower(0, 1) == 0.0);
  CHECK(chol.lower(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(chol.lower(1, 1) ==
        doctest::Approx(1.4142135623730951).epsilon(1e-15));
  // det(a) = 8, so log_det should agree with log 8.
  CHECK(chol.log_det() == doctest::Approx(std::log(8.0)).epsilon(1e-14));
}

TEST_CASE("CholeskyFactor solves agree with a dense reference") {
  NormalRng rng(31);
  const Matrix m = random_matrix(rng, 8, 8);
  const Matrix a = m * m.transpose() + 8.0 * Matrix::Identity(8, 8);
  const Matrix b = random_matrix(rng, 8, 3);
  const CholeskyFactor chol = robust_cholesky(a);

  CHECK((a * chol.solve(b) - b).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((chol.lower * chol.solve_lower(b) - b).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((chol.lower.transpose() * chol.solve_lower_transpose(b) - b)
            .cwiseAbs()
            .maxCoeff() < 1e-9);
  CHECK((a * chol.inverse() - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <
        1e-9);
  CHECK(chol.log_det() ==
        doctest::Approx(std::log(a.determinant())).epsilon(1e-10));
}

TEST_CASE("robust_cholesky escalates jitter on a singular matrix") {
  Matrix a(2, 2);
  a << 1.0, 1.0, 1.0, 1.0;  // rank one
  const CholeskyFactor chol = robust_cholesky(a);
  CHECK(chol.jitter > 0.0);
  CHECK(chol.jitter <= 1e-2);
  const Matrix rebuilt = chol.lower * chol.lower.transpose();
  Matrix target = a;
  target.diagonal().array() += chol.jitter;
  CHECK((rebuilt - target).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("robust_cholesky reports the final jitter when it gives up") {
  Matrix a(2, 2);
  a << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1; jitter cannot rescue it
  try {
    robust_cholesky(a);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.jitter() == doctest::Approx(1e-2).epsilon(1e-12));
  }
}

TEST_CASE("robust_cholesky rejects malformed input") {
  CHECK_THROWS_AS(robust_cholesky(Matrix::Zero(2, 3)), std::invalid_argument);

  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.1, 1.0;
  CHECK_THROWS_AS(robust_cholesky(asym), std::invalid_argument);

  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(robust_cholesky(bad), std::invalid_argument);
}

TEST_CASE("hyperparameter round-trip and validation") {
  Hyperparameters hp = Hyperparameters::from_values(
      2.5, (Vector(2) << 0.3, 0.7).finished(), 0.01);
  CHECK(hp.signal_variance() == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(hp.lengthscales()(0) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(hp.lengthscales()(1) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(hp.noise_variance() == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(hp.free_count() == 4);

  const Vector v = hp.to_vector();
  const Hyperparameters back = Hyperparameters::from_vector(v);
  CHECK(back.same_values(hp));

  CHECK_THROWS_AS(Hyperparameters::from_values(
                      -1.0, (Vector(1) << 1.0).finished(), 0.1),
                  std::invalid_argument);
}
