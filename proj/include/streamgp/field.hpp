#ifndef STREAMGP_FIELD_HPP
#define STREAMGP_FIELD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "streamgp/rng.hpp"
#include "streamgp/types.hpp"

namespace streamgp {

/// Discrete scalar field over a regular grid. Models never see native
/// units: every coordinate handed to them is normalized to [0,1]^2 with
/// x = col / (width-1) and y = row / (height-1), so lengthscale 1 spans
/// the whole grid regardless of resolution.
struct FieldGrid {
  Index width = 0;   // cells along x
  Index height = 0;  // cells along y
  double resolution = 1.0;  // native cell size, metadata only
  Vector values;     // row-major, length width * height

  double value(Index row, Index col) const {
    return values(row * width + col);
  }
  Eigen::RowVector2d normalized_point(Index row, Index col) const;

  /// All cell centers as model inputs, one row per cell in values order.
  Matrix grid_inputs() const;

  void validate() const;
};

struct GridLocation {
  Index row = 0;
  Index col = 0;
};

/// Boustrophedon coverage: waypoints in traversal order, sliced into
/// consecutive fixed-size batches by the harness.
struct SamplingPlan {
  std::vector<GridLocation> waypoints;
  Index batch_size = 0;
  double noise_variance = 0.0;

  Index batch_count() const {
    return batch_size > 0 ? static_cast<Index>(waypoints.size()) / batch_size
                          : 0;
  }
  void validate() const;
};

/// Exact draw from the zero-mean SE-ARD prior over the grid's normalized
/// cell centers. The kernel factorizes over grid axes, so the draw costs
/// one Cholesky per axis (height x height and width x width) instead of one
/// of size width*height. ell_1 acts along x (columns), ell_2 along y (rows).
FieldGrid sample_gp_field(Index width, Index height, const Hyperparameters& hp,
                          std::uint64_t seed);

/// Lawnmower path: transect_count rows spread evenly over the grid, each
/// traversed over samples_per_transect consecutive columns, alternating
/// direction. Throws if the geometry does not fit the grid or the total
/// sample count is not a whole number of batches.
SamplingPlan lawnmower_plan(const FieldGrid& grid, Index transect_count,
                            Index samples_per_transect, Index batch_size,
                            double noise_variance);

/// Field value at the cell plus zero-mean Gaussian noise.
double observe(const FieldGrid& field, const GridLocation& location,
               double noise_variance, NormalRng& rng);

/// One batch of the plan as a training set: normalized inputs and noisy
/// observations drawn in waypoint order from the shared stream rng.
Dataset observe_batch(const FieldGrid& field, const SamplingPlan& plan,
                      Index batch_index, NormalRng& rng);

/// Grid CSV: header `width,height,resolution`, then `height` rows of
/// `width` comma-separated values, row 0 first. Parse errors carry the
/// offending line and column.
FieldGrid load_grid_csv(const std::string& path);
void save_grid_csv(const FieldGrid& field, const std::string& path);

}  // namespace streamgp

#endif  // STREAMGP_FIELD_HPP
