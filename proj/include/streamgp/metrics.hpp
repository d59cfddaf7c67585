#ifndef STREAMGP_METRICS_HPP
#define STREAMGP_METRICS_HPP

#include <chrono>
#include <string>

#include "streamgp/types.hpp"

namespace streamgp {

enum class ModelKind { gpr, gpr_window, vsgp, spgp, ssgp };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// sqrt(mean squared difference) between truth and predicted means.
double rmse(const Vector& truth, const Vector& predicted_mean);

/// Average negative log Gaussian density of each target under the
/// prediction's mean and variance_y.
double nlpd(const Vector& test_targets, const Prediction& prediction);

/// Memory proxy: training points a model must keep plus its pseudo points.
/// Dense models keep everything (windowed: up to `window`); sparse batch
/// models keep the data seen so far plus M; the streaming model only ever
/// holds the current batch plus M.
Index onboard_count(ModelKind kind, Index n_seen, Index batch_size,
                    Index window, Index pseudo_count);

/// One row of the per-batch results table.
struct BatchRecord {
  std::string model;
  Index batch_index = 0;   // 1-based
  Index cumulative_n = 0;
  Index m_pseudo = 0;
  double rmse = 0.0;
  double nlpd = 0.0;
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
  Index onboard_points = 0;
  double sigma_f2 = 0.0;
  double ell_1 = 0.0;
  double ell_2 = 0.0;
  double sigma_y2 = 0.0;
  bool failed = false;
};

/// Monotonic wall-clock stopwatch.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace streamgp

#endif  // STREAMGP_METRICS_HPP
