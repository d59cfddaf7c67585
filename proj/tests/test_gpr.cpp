#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "streamgp/exact_gp.hpp"
#include "streamgp/kernel.hpp"
#include "streamgp/optimizer.hpp"
#include "test_util.hpp"

using namespace streamgp;
using namespace streamgp::test;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Textbook O(N^3) evaluation through an explicit inverse and determinant,
// kept deliberately different from the library's Cholesky path.
double naive_logml(const Dataset& data, const Hyperparameters& hp) {
  Matrix k = kernel_matrix(data.inputs, data.inputs, hp);
  k.diagonal().array() += hp.noise_variance();
  const double n = static_cast<double>(data.size());
  return -0.5 * data.targets.dot(k.inverse() * data.targets) -
         0.5 * std::log(k.determinant()) - 0.5 * n * kLog2Pi;
}

Prediction naive_predict(const Dataset& data, const Hyperparameters& hp,
                         const Matrix& queries) {
  Matrix k = kernel_matrix(data.inputs, data.inputs, hp);
  k.diagonal().array() += hp.noise_variance();
  const Matrix kinv = k.inverse();
  const Matrix ks = kernel_matrix(queries, data.inputs, hp);
  Prediction out;
  out.mean = ks * (kinv * data.targets);
  out.variance_f =
      kernel_diag(queries, hp) - (ks * kinv).cwiseProduct(ks).rowwise().sum();
  out.variance_y = out.variance_f.array() + hp.noise_variance();
  return out;
}

Hyperparameters unit_hp(Index d) {
  return Hyperparameters(0.0, Vector::Zero(d), 0.0);
}

}  // namespace

TEST_CASE("single observation at the origin has a closed-form evidence") {
  Dataset data(Matrix::Zero(1, 2), Vector::Zero(1));
  const Objective obj = gpr_log_marginal_likelihood(data, unit_hp(2));
  // K = sf2 + sy2 = 2 and y = 0, so the value collapses to
  // -1/2 log 2 - 1/2 log 2pi.
  CHECK(obj.value == doctest::Approx(-1.2655121234846454).epsilon(1e-13));
  REQUIRE(obj.gradient.size() == 4);
  // d/dlog sf2 = -sf2 / (2 K) = -1/4, same for the noise; lengthscales
  // cannot matter with a single point.
  CHECK(obj.gradient(0) == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(obj.gradient(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(obj.gradient(2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(obj.gradient(3) == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("evidence matches a naive dense implementation") {
  NormalRng rng(13);
  for (int rep = 0; rep < 5; ++rep) {
    const Dataset data = random_dataset(rng, 6 + rep, 2);
    const Hyperparameters hp = random_hyperparameters(rng, 2);
    const Objective obj = gpr_log_marginal_likelihood(data, hp);
    CHECK(obj.value == doctest::Approx(naive_logml(data, hp)).epsilon(1e-10));
  }
}

TEST_CASE("evidence is invariant to observation order") {
  NormalRng rng(17);
  const Dataset data = random_dataset(rng, 8, 2);
  Dataset shuffled = data;
  const Index perm[8] = {5, 2, 7, 0, 3, 6, 1, 4};
  for (Index i = 0; i < 8; ++i) {
    shuffled.inputs.row(i) = data.inputs.row(perm[i]);
    shuffled.targets(i) = data.targets(perm[i]);
  }
  const Hyperparameters hp = random_hyperparameters(rng, 2);
  const double a = gpr_log_marginal_likelihood(data, hp).value;
  const double b = gpr_log_marginal_likelihood(shuffled, hp).value;
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("evidence gradient agrees with central differences") {
  NormalRng rng(29);
  for (int rep = 0; rep < 4; ++rep) {
    const Dataset data = random_dataset(rng, 10, 2);
    const Hyperparameters hp = random_hyperparameters(rng, 2);
    const double worst = check_gradient(
        [&](const Vector& theta, Vector& grad) {
          const Objective obj = gpr_log_marginal_likelihood(
              data, Hyperparameters::from_vector(theta));
          grad = obj.gradient;
          return obj.value;
        },
        hp.to_vector(), 1e-5);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("empty dataset is rejected for training") {
  CHECK_THROWS_AS(gpr_log_marginal_likelihood(Dataset(), unit_hp(2)),
                  std::invalid_argument);
}

TEST_CASE("prediction reproduces the naive formulas") {
  NormalRng rng(37);
  const Dataset data = random_dataset(rng, 9, 2);
  const Hyperparameters hp = random_hyperparameters(rng, 2);
  const Matrix queries = random_matrix(rng, 5, 2);
  const Prediction got = gpr_predict(data, hp, queries);
  const Prediction want = naive_predict(data, hp, queries);
  CHECK((got.mean - want.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((got.variance_f - want.variance_f).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((got.variance_y - want.variance_y).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("near-noiseless prediction interpolates the data") {
  NormalRng rng(41);
  const Dataset data = random_dataset(rng, 7, 2);
  const Hyperparameters hp = Hyperparameters::from_values(
      1.0, (Vector(2) << 1.0, 1.0).finished(), 1e-10);
  const Prediction pred = gpr_predict(data, hp, data.inputs);
  CHECK((pred.mean - data.targets).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(pred.variance_f.maxCoeff() < 1e-4);
}

TEST_CASE("far-away queries revert to the prior") {
  NormalRng rng(43);
  const Dataset data = random_dataset(rng, 6, 2);
  const Hyperparameters hp = unit_hp(2);
  Matrix far(1, 2);
  far << 100.0, -100.0;
  const Prediction pred = gpr_predict(data, hp, far);
  CHECK(std::abs(pred.mean(0)) < 1e-8);
  CHECK(pred.variance_f(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pred.variance_y(0) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("prediction with no data returns the prior everywhere") {
  const Hyperparameters hp = Hyperparameters::from_values(
      2.0, (Vector(2) << 1.0, 1.0).finished(), 0.5);
  const Prediction pred = gpr_predict(Dataset(), hp, Matrix::Zero(3, 2));
  CHECK(pred.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK((pred.variance_f.array() - 2.0).abs().maxCoeff() < 1e-14);
  CHECK((pred.variance_y.array() - 2.5).abs().maxCoeff() < 1e-14);
}

TEST_CASE("variances are positive and shrink as data accumulates") {
  NormalRng rng(47);
  const Dataset all = random_dataset(rng, 20, 2);
  const Hyperparameters hp = unit_hp(2);
  const Matrix queries = random_matrix(rng, 6, 2);

  Dataset half(Matrix(all.inputs.topRows(10)), Vector(all.targets.head(10)));
  const Prediction coarse = gpr_predict(half, hp, queries);
  const Prediction fine = gpr_predict(all, hp, queries);
  for (Index i = 0; i < queries.rows(); ++i) {
    CHECK(coarse.variance_f(i) > 0.0);
    CHECK(fine.variance_f(i) <= coarse.variance_f(i) + 1e-8);
  }
}

TEST_CASE("window update keeps the most recent pairs in arrival order") {
  NormalRng rng(53);
  Dataset state;
  for (int b = 0; b < 4; ++b) {
    Matrix x(3, 1);
    Vector y(3);
    for (Index i = 0; i < 3; ++i) {
      x(i, 0) = static_cast<double>(3 * b + i);
      y(i) = 10.0 * x(i, 0);
    }
    state = gpr_window_update(state, Dataset(x, y), 5);
    CHECK(state.size() == std::min<Index>(3 * (b + 1), 5));
  }
  // 12 points seen, window 5: entries 7..11 should remain.
  for (Index i = 0; i < 5; ++i) {
    CHECK(state.inputs(i, 0) == doctest::Approx(7.0 + i));
    CHECK(state.targets(i) == doctest::Approx(70.0 + 10.0 * i));
  }

  // A window at least as large as the stream is a plain concatenation.
  Dataset full;
  Matrix x(2, 1);
  x << 0.0, 1.0;
  full = gpr_window_update(full, Dataset(x, Vector::Zero(2)), 500);
  CHECK(full.size() == 2);
  CHECK_THROWS_AS(gpr_window_update(full, full, 0), std::invalid_argument);
}
