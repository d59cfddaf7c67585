#include "streamgp/metrics.hpp"

#include <cmath>

namespace streamgp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gpr: return "gpr";
    case ModelKind::gpr_window: return "gpr500";
    case ModelKind::vsgp: return "vsgp";
    case ModelKind::spgp: return "spgp";
    case ModelKind::ssgp: return "ssgp";
  }
  throw std::invalid_argument("to_string: unknown ModelKind");
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "gpr") return ModelKind::gpr;
  if (name == "gpr500") return ModelKind::gpr_window;
  if (name == "vsgp") return ModelKind::vsgp;
  if (name == "spgp") return ModelKind::spgp;
  if (name == "ssgp") return ModelKind::ssgp;
  throw std::invalid_argument("unknown model name: " + name);
}

double rmse(const Vector& truth, const Vector& predicted_mean) {
  if (truth.size() != predicted_mean.size() || truth.size() < 1) {
    throw std::invalid_argument("rmse: length mismatch or empty input");
  }
  return std::sqrt((truth - predicted_mean).squaredNorm() /
                   static_cast<double>(truth.size()));
}

double nlpd(const Vector& test_targets, const Prediction& prediction) {
  const Index t = test_targets.size();
  if (prediction.mean.size() != t || prediction.variance_y.size() != t ||
      t < 1) {
    throw std::invalid_argument("nlpd: length mismatch or empty input");
  }
  if ((prediction.variance_y.array() <= 0.0).any()) {
    throw std::invalid_argument("nlpd: non-positive predictive variance");
  }
  double total = 0.0;
  for (Index i = 0; i < t; ++i) {
    const double v = prediction.variance_y(i);
    const double r = test_targets(i) - prediction.mean(i);
    total += 0.5 * (kLog2Pi + std::log(v) + r * r / v);
  }
  return total / static_cast<double>(t);
}

Index onboard_count(ModelKind kind, Index n_seen, Index batch_size,
                    Index window, Index pseudo_count) {
  switch (kind) {
    case ModelKind::gpr:
      return n_seen;
    case ModelKind::gpr_window:
      return std::min(n_seen, window);
    case ModelKind::vsgp:
    case ModelKind::spgp:
      return n_seen + pseudo_count;
    case ModelKind::ssgp:
      return batch_size + pseudo_count;
  }
  throw std::invalid_argument("onboard_count: unknown ModelKind");
}

}  // namespace streamgp
