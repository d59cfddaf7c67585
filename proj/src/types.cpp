#include "streamgp/types.hpp"

#include <cmath>

namespace streamgp {

Hyperparameters Hyperparameters::from_values(double signal_variance,
                                             const Vector& lengthscales,
                                             double noise_variance) {
  if (signal_variance <= 0.0 || noise_variance <= 0.0 ||
      (lengthscales.array() <= 0.0).any()) {
    throw std::invalid_argument(
        "hyperparameter values must be strictly positive");
  }
  Hyperparameters hp(std::log(signal_variance),
                     lengthscales.array().log().matrix(),
                     std::log(noise_variance));
  hp.validate();
  return hp;
}

Vector Hyperparameters::to_vector() const {
  Vector v(free_count());
  v(0) = log_signal_variance;
  v.segment(1, input_dim()) = log_lengthscales;
  v(free_count() - 1) = log_noise_variance;
  return v;
}

Hyperparameters Hyperparameters::from_vector(const Vector& v) {
  if (v.size() < 3) {
    throw std::invalid_argument("hyperparameter vector needs at least 3 entries");
  }
  Hyperparameters hp;
  hp.log_signal_variance = v(0);
  hp.log_lengthscales = v.segment(1, v.size() - 2);
  hp.log_noise_variance = v(v.size() - 1);
  return hp;
}

bool Hyperparameters::same_values(const Hyperparameters& other) const {
  return log_signal_variance == other.log_signal_variance &&
         log_noise_variance == other.log_noise_variance &&
         log_lengthscales.size() == other.log_lengthscales.size() &&
         log_lengthscales == other.log_lengthscales;
}

void Hyperparameters::validate() const {
  if (log_lengthscales.size() == 0) {
    throw std::invalid_argument("lengthscale vector is empty");
  }
  auto finite_positive = [](double log_v) {
    double v = std::exp(log_v);
    return std::isfinite(log_v) && std::isfinite(v) && v > 0.0;
  };
  bool ok = finite_positive(log_signal_variance) &&
            finite_positive(log_noise_variance);
  for (Index d = 0; d < log_lengthscales.size(); ++d) {
    ok = ok && finite_positive(log_lengthscales(d));
  }
  if (!ok) {
    throw std::invalid_argument(
        "hyperparameters must exponentiate to positive finite values");
  }
}

void Dataset::validate() const {
  if (inputs.rows() != targets.size()) {
    throw std::invalid_argument("dataset row count does not match target count");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("dataset contains non-finite entries");
  }
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("dataset dimension mismatch in concat");
  }
  Dataset out;
  out.inputs.resize(a.size() + b.size(), a.dim());
  out.inputs << a.inputs, b.inputs;
  out.targets.resize(a.size() + b.size());
  out.targets << a.targets, b.targets;
  return out;
}

}  // namespace streamgp
