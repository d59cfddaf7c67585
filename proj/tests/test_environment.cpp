#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "streamgp/field.hpp"
#include "streamgp/kernel.hpp"
#include "test_util.hpp"

using namespace streamgp;

namespace {

Hyperparameters field_hp(double sf2, double ell_x, double ell_y,
                         double sy2 = 0.01) {
  return Hyperparameters::from_values(
      sf2, (Vector(2) << ell_x, ell_y).finished(), sy2);
}

std::string temp_path(const char* name) {
  return std::string("test_env_") + name;
}

}  // namespace

TEST_CASE("normal generator has the right first and second moments") {
  NormalRng rng(1234);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));

  // Uniform draws stay in [0, 1).
  NormalRng u(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("seeded draws are reproducible and seeds are independent") {
  NormalRng a(99), b(99), c(100);
  bool all_equal = true, any_differ = false;
  for (int i = 0; i < 64; ++i) {
    const double x = a.normal();
    all_equal = all_equal && (x == b.normal());
    any_differ = any_differ || (x != c.normal());
  }
  CHECK(all_equal);
  CHECK(any_differ);
}

TEST_CASE("sampled fields are deterministic in the seed") {
  const Hyperparameters hp = field_hp(1.0, 0.3, 0.7);
  const FieldGrid a = sample_gp_field(20, 15, hp, 5);
  const FieldGrid b = sample_gp_field(20, 15, hp, 5);
  const FieldGrid c = sample_gp_field(20, 15, hp, 6);
  a.validate();
  CHECK(a.width == 20);
  CHECK(a.height == 15);
  CHECK(a.values.size() == 300);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.values - c.values).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("grid coordinates normalize to the unit square") {
  const FieldGrid f = sample_gp_field(11, 21, field_hp(1.0, 0.3, 0.7), 1);
  CHECK(f.normalized_point(0, 0)(0) == 0.0);
  CHECK(f.normalized_point(0, 0)(1) == 0.0);
  CHECK(f.normalized_point(20, 10)(0) == 1.0);
  CHECK(f.normalized_point(20, 10)(1) == 1.0);
  CHECK(f.normalized_point(0, 5)(0) == doctest::Approx(0.5));
  CHECK(f.normalized_point(10, 0)(1) == doctest::Approx(0.5));

  const Matrix inputs = f.grid_inputs();
  REQUIRE(inputs.rows() == 231);
  // values order is row-major, so inputs must be too.
  CHECK(inputs(0, 0) == 0.0);
  CHECK(inputs(1, 0) == doctest::Approx(0.1));  // second cell moves in x
  CHECK(inputs(11, 1) == doctest::Approx(0.05));  // row 1 moves in y
}

TEST_CASE("field covariance matches the dense kernel across seeds") {
  // The sampler factorizes the covariance over axes; accumulating the
  // empirical covariance over many independent draws must reproduce the
  // full dense kernel over the normalized cell centers, including the
  // anisotropy between the two axes.
  const Index w = 6, h = 5;
  const Hyperparameters hp = field_hp(1.3, 0.25, 0.6);
  const int draws = 3000;

  Matrix cov = Matrix::Zero(w * h, w * h);
  Vector mean = Vector::Zero(w * h);
  for (int s = 0; s < draws; ++s) {
    const FieldGrid f =
        sample_gp_field(w, h, hp, 1000 + static_cast<std::uint64_t>(s));
    cov += f.values * f.values.transpose();
    mean += f.values;
  }
  cov /= draws;
  mean /= draws;

  const FieldGrid probe = sample_gp_field(w, h, hp, 1);
  const Matrix expected =
      kernel_matrix(probe.grid_inputs(), probe.grid_inputs(), hp);
  CHECK((cov - expected).cwiseAbs().maxCoeff() < 0.15);
  CHECK(mean.cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("short lengthscales decorrelate cells") {
  const FieldGrid f = sample_gp_field(50, 50, field_hp(1.0, 0.02, 0.02), 17);
  const double var = f.values.squaredNorm() / f.values.size();
  CHECK(var == doctest::Approx(1.0).epsilon(0.15));
  CHECK(std::abs(f.values.mean()) < 0.1);
}

TEST_CASE("default lawnmower geometry covers the grid in 98 batches") {
  const FieldGrid f = sample_gp_field(100, 100, field_hp(1.0, 0.3, 0.7), 3);
  const SamplingPlan plan = lawnmower_plan(f, 44, 98, 44, 0.01);
  plan.validate();
  CHECK(plan.waypoints.size() == 4312);
  CHECK(plan.batch_count() == 98);

  // Transect rows strictly increase from the bottom row to the top one.
  std::set<Index> rows;
  Index prev = -1;
  for (std::size_t i = 0; i < plan.waypoints.size(); i += 98) {
    const Index row = plan.waypoints[i].row;
    CHECK(row > prev);
    prev = row;
    rows.insert(row);
  }
  CHECK(rows.size() == 44);
  CHECK(*rows.begin() == 0);
  CHECK(*rows.rbegin() == 99);

  // Within a transect the vehicle advances one column per sample, and
  // consecutive transects run in opposite directions.
  for (std::size_t i = 0; i < plan.waypoints.size(); ++i) {
    const auto& wp = plan.waypoints[i];
    CHECK(wp.col >= 0);
    CHECK(wp.col < 98);
    if (i % 98 != 0) {
      CHECK(std::abs(wp.col - plan.waypoints[i - 1].col) == 1);
      CHECK(wp.row == plan.waypoints[i - 1].row);
    }
  }
  CHECK(plan.waypoints[0].col == 0);
  CHECK(plan.waypoints[97].col == 97);
  CHECK(plan.waypoints[98].col == 97);   // second transect starts reversed
  CHECK(plan.waypoints[195].col == 0);

  // No waypoint repeats anywhere in the plan.
  std::set<std::pair<Index, Index>> seen;
  for (const auto& wp : plan.waypoints) {
    CHECK(seen.emplace(wp.row, wp.col).second);
  }
}

TEST_CASE("lawnmower geometry violations are rejected") {
  const FieldGrid f = sample_gp_field(10, 10, field_hp(1.0, 0.3, 0.7), 3);
  CHECK_THROWS_AS(lawnmower_plan(f, 4, 20, 4, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(lawnmower_plan(f, 20, 4, 4, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(lawnmower_plan(f, 4, 5, 3, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(lawnmower_plan(f, 1, 5, 5, 0.01), std::invalid_argument);
  CHECK_NOTHROW(lawnmower_plan(f, 4, 5, 20, 0.01));  // one batch of everything
}

TEST_CASE("observations add controlled noise to the field") {
  const FieldGrid f = sample_gp_field(12, 12, field_hp(1.0, 0.3, 0.7), 21);

  NormalRng quiet(5);
  const double noiseless = observe(f, {3, 4}, 0.0, quiet);
  CHECK(noiseless == f.value(3, 4));

  NormalRng rng(5);
  const int n = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = observe(f, {3, 4}, 0.25, rng);
    sum += v - f.value(3, 4);
    sum2 += (v - f.value(3, 4)) * (v - f.value(3, 4));
  }
  CHECK(std::abs(sum / n) < 0.015);
  CHECK(sum2 / n == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("observe_batch slices the plan in arrival order") {
  const FieldGrid f = sample_gp_field(16, 16, field_hp(1.0, 0.3, 0.7), 23);
  const SamplingPlan plan = lawnmower_plan(f, 4, 8, 8, 0.0);

  NormalRng rng(31);
  const Dataset b0 = observe_batch(f, plan, 0, rng);
  const Dataset b2 = observe_batch(f, plan, 2, rng);
  REQUIRE(b0.size() == 8);
  REQUIRE(b2.size() == 8);

  // Batch 0 walks the first transect; with zero noise the targets are the
  // field values and the inputs are the normalized waypoints.
  for (Index i = 0; i < 8; ++i) {
    const auto& wp = plan.waypoints[static_cast<std::size_t>(i)];
    CHECK(b0.targets(i) == f.value(wp.row, wp.col));
    CHECK(b0.inputs(i, 0) ==
          doctest::Approx(static_cast<double>(wp.col) / 15.0));
    CHECK(b0.inputs(i, 1) ==
          doctest::Approx(static_cast<double>(wp.row) / 15.0));
  }
  const auto& wp16 = plan.waypoints[16];
  CHECK(b2.targets(0) == f.value(wp16.row, wp16.col));

  CHECK_THROWS_AS(observe_batch(f, plan, 4, rng), std::out_of_range);
}

TEST_CASE("grid csv round-trips exactly") {
  FieldGrid f = sample_gp_field(7, 4, field_hp(1.0, 0.3, 0.7), 29);
  f.resolution = 2.5;
  const std::string path = temp_path("roundtrip.csv");
  save_grid_csv(f, path);
  const FieldGrid back = load_grid_csv(path);
  CHECK(back.width == 7);
  CHECK(back.height == 4);
  CHECK(back.resolution == 2.5);
  CHECK((back.values - f.values).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("grid csv parser reports precise error locations") {
  const std::string path = temp_path("bad.csv");

  {
    std::ofstream out(path);
    out << "3,2,1.0\n1.0,2.0,3.0\n4.0,oops,6.0\n";
  }
  try {
    load_grid_csv(path);
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":3") != std::string::npos);       // line number
    CHECK(msg.find("column 2") != std::string::npos);  // offending cell
  }

  {
    std::ofstream out(path);
    out << "3,2,1.0\n1.0,2.0\n4.0,5.0,6.0\n";  // short row
  }
  CHECK_THROWS_AS(load_grid_csv(path), std::runtime_error);

  {
    std::ofstream out(path);
    out << "3,2,1.0\n1.0,2.0,3.0\n";  // missing row
  }
  CHECK_THROWS_AS(load_grid_csv(path), std::runtime_error);

  {
    std::ofstream out(path);
    out << "0,2,1.0\n";  // degenerate dimensions
  }
  CHECK_THROWS_AS(load_grid_csv(path), std::runtime_error);

  std::remove(path.c_str());
  CHECK_THROWS_AS(load_grid_csv("does_not_exist.csv"), std::runtime_error);
}
