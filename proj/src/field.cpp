#include "streamgp/field.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "streamgp/kernel.hpp"
#include "streamgp/linalg.hpp"

namespace streamgp {

Eigen::RowVector2d FieldGrid::normalized_point(Index row, Index col) const {
  return {static_cast<double>(col) / static_cast<double>(width - 1),
          static_cast<double>(row) / static_cast<double>(height - 1)};
}

Matrix FieldGrid::grid_inputs() const {
  Matrix out(width * height, 2);
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) {
      out.row(r * width + c) = normalized_point(r, c);
    }
  }
  return out;
}

void FieldGrid::validate() const {
  if (width < 2 || height < 2) {
    throw std::invalid_argument("FieldGrid: need at least 2 cells per axis");
  }
  if (values.size() != width * height) {
    throw std::invalid_argument("FieldGrid: values size != width * height");
  }
  if (!values.allFinite()) {
    throw std::invalid_argument("FieldGrid: non-finite cell value");
  }
}

void SamplingPlan::validate() const {
  if (batch_size < 1) {
    throw std::invalid_argument("SamplingPlan: batch_size must be positive");
  }
  if (waypoints.empty() ||
      static_cast<Index>(waypoints.size()) % batch_size != 0) {
    throw std::invalid_argument(
        "SamplingPlan: sample count is not a whole number of batches");
  }
  if (noise_variance < 0.0) {
    throw std::invalid_argument("SamplingPlan: negative noise variance");
  }
}

FieldGrid sample_gp_field(Index width, Index height, const Hyperparameters& hp,
                          std::uint64_t seed) {
  hp.validate();
  if (width < 2 || height < 2) {
    throw std::invalid_argument("sample_gp_field: grid dimensions must be >= 2");
  }
  if (hp.input_dim() != 2) {
    throw std::invalid_argument("sample_gp_field: need 2-dimensional kernel");
  }
  const Vector ell = hp.lengthscales();

  // Unit-amplitude 1D factors along each axis; the product of the two plus
  // the sf2 scale below reproduces the full 2D SE-ARD covariance.
  Matrix xs(width, 1), ys(height, 1);
  for (Index c = 0; c < width; ++c) {
    xs(c, 0) = static_cast<double>(c) / static_cast<double>(width - 1);
  }
  for (Index r = 0; r < height; ++r) {
    ys(r, 0) = static_cast<double>(r) / static_cast<double>(height - 1);
  }
  const Hyperparameters kx =
      Hyperparameters::from_values(1.0, Vector::Constant(1, ell(0)), 1.0);
  const Hyperparameters ky =
      Hyperparameters::from_values(1.0, Vector::Constant(1, ell(1)), 1.0);
  const CholeskyFactor lc = robust_cholesky(kernel_matrix(xs, xs, kx));
  const CholeskyFactor lr = robust_cholesky(kernel_matrix(ys, ys, ky));

  NormalRng rng(seed);
  Matrix z(height, width);
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) {
      z(r, c) = rng.normal();
    }
  }
  const Matrix f = std::sqrt(hp.signal_variance()) * lr.lower * z *
                   lc.lower.transpose();

  FieldGrid grid;
  grid.width = width;
  grid.height = height;
  grid.values.resize(width * height);
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) {
      grid.values(r * width + c) = f(r, c);
    }
  }
  return grid;
}

SamplingPlan lawnmower_plan(const FieldGrid& grid, Index transect_count,
                            Index samples_per_transect, Index batch_size,
                            double noise_variance) {
  grid.validate();
  if (transect_count < 2 || transect_count > grid.height) {
    throw std::invalid_argument("lawnmower_plan: transect count does not fit grid");
  }
  if (samples_per_transect < 1 || samples_per_transect > grid.width) {
    throw std::invalid_argument("lawnmower_plan: transect length does not fit grid");
  }
  const Index total = transect_count * samples_per_transect;
  if (batch_size < 1 || total % batch_size != 0) {
    throw std::invalid_argument(
        "lawnmower_plan: total samples not divisible by batch size");
  }

  SamplingPlan plan;
  plan.batch_size = batch_size;
  plan.noise_variance = noise_variance;
  plan.waypoints.reserve(total);
  Index previous_row = -1;
  for (Index t = 0; t < transect_count; ++t) {
    const Index row = static_cast<Index>(std::lround(
        static_cast<double>(t) * static_cast<double>(grid.height - 1) /
        static_cast<double>(transect_count - 1)));
    if (row <= previous_row) {
      throw std::invalid_argument(
          "lawnmower_plan: transects collapse onto the same row");
    }
    previous_row = row;
    for (Index s = 0; s < samples_per_transect; ++s) {
      const Index col = (t % 2 == 0) ? s : samples_per_transect - 1 - s;
      plan.waypoints.push_back({row, col});
    }
  }
  return plan;
}

double observe(const FieldGrid& field, const GridLocation& location,
               double noise_variance, NormalRng& rng) {
  if (location.row < 0 || location.row >= field.height || location.col < 0 ||
      location.col >= field.width) {
    throw std::out_of_range("observe: location outside grid");
  }
  if (noise_variance < 0.0) {
    throw std::invalid_argument("observe: negative noise variance");
  }
  return field.value(location.row, location.col) +
         std::sqrt(noise_variance) * rng.normal();
}

Dataset observe_batch(const FieldGrid& field, const SamplingPlan& plan,
                      Index batch_index, NormalRng& rng) {
  plan.validate();
  if (batch_index < 0 || batch_index >= plan.batch_count()) {
    throw std::out_of_range("observe_batch: batch index out of range");
  }
  Dataset batch;
  batch.inputs.resize(plan.batch_size, 2);
  batch.targets.resize(plan.batch_size);
  for (Index i = 0; i < plan.batch_size; ++i) {
    const GridLocation& loc = plan.waypoints[batch_index * plan.batch_size + i];
    batch.inputs.row(i) = field.normalized_point(loc.row, loc.col);
    batch.targets(i) = observe(field, loc, plan.noise_variance, rng);
  }
  return batch;
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, Index line, Index column,
                             const std::string& what) {
  std::ostringstream msg;
  msg << path << ":" << line << ": column " << column << ": " << what;
  throw std::runtime_error(msg.str());
}

double parse_cell(const std::string& token, const std::string& path,
                  Index line, Index column) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    parse_fail(path, line, column, "not a number: '" + token + "'");
  }
  if (!std::isfinite(value)) {
    parse_fail(path, line, column, "non-finite cell value");
  }
  return value;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

FieldGrid load_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_grid_csv: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    parse_fail(path, 1, 1, "missing header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_commas(line);
  if (header.size() != 3) {
    parse_fail(path, 1, 1, "header must be width,height,resolution");
  }
  FieldGrid grid;
  grid.width = static_cast<Index>(parse_cell(header[0], path, 1, 1));
  grid.height = static_cast<Index>(parse_cell(header[1], path, 1, 2));
  grid.resolution = parse_cell(header[2], path, 1, 3);
  if (grid.width < 2 || grid.height < 2) {
    parse_fail(path, 1, 1, "grid dimensions must be at least 2x2");
  }
  grid.values.resize(grid.width * grid.height);

  for (Index r = 0; r < grid.height; ++r) {
    if (!std::getline(in, line)) {
      parse_fail(path, r + 2, 1, "missing data row");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> cells = split_commas(line);
    if (static_cast<Index>(cells.size()) != grid.width) {
      parse_fail(path, r + 2, 1,
                 "expected " + std::to_string(grid.width) + " cells, got " +
                     std::to_string(cells.size()));
    }
    for (Index c = 0; c < grid.width; ++c) {
      grid.values(r * grid.width + c) = parse_cell(cells[c], path, r + 2, c + 1);
    }
  }
  grid.validate();
  return grid;
}

void save_grid_csv(const FieldGrid& field, const std::string& path) {
  field.validate();
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_grid_csv: cannot open " + path);
  }
  char buffer[64];
  out << field.width << "," << field.height << ",";
  std::snprintf(buffer, sizeof(buffer), "%.17g", field.resolution);
  out << buffer << "\n";
  for (Index r = 0; r < field.height; ++r) {
    for (Index c = 0; c < field.width; ++c) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", field.value(r, c));
      out << (c == 0 ? "" : ",") << buffer;
    }
    out << "\n";
  }
  if (!out.good()) {
    throw std::runtime_error("save_grid_csv: write failed for " + path);
  }
}

}  // namespace streamgp
