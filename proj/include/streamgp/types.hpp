#ifndef STREAMGP_TYPES_HPP
#define STREAMGP_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace streamgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown when a factorization cannot be completed even at the maximum
/// jitter level. Carries the last jitter value that was attempted.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& what, double jitter)
      : std::runtime_error(what), jitter_(jitter) {}
  double jitter() const { return jitter_; }

private:
  double jitter_;
};

/// SE-ARD kernel hyperparameters plus observation noise, stored as logs so
/// every optimization over them is unconstrained.
struct Hyperparameters {
  double log_signal_variance = 0.0;
  Vector log_lengthscales;  // one per input dimension
  double log_noise_variance = 0.0;

  Hyperparameters() = default;
  Hyperparameters(double log_sf2, Vector log_ell, double log_sy2)
      : log_signal_variance(log_sf2),
        log_lengthscales(std::move(log_ell)),
        log_noise_variance(log_sy2) {}

  /// Builds from natural-scale (positive) values.
  static Hyperparameters from_values(double signal_variance,
                                     const Vector& lengthscales,
                                     double noise_variance);

  double signal_variance() const { return std::exp(log_signal_variance); }
  Vector lengthscales() const { return log_lengthscales.array().exp(); }
  double noise_variance() const { return std::exp(log_noise_variance); }
  Index input_dim() const { return log_lengthscales.size(); }

  /// Number of free parameters: log sf2, D log lengthscales, log sy2.
  Index free_count() const { return input_dim() + 2; }
  Vector to_vector() const;
  static Hyperparameters from_vector(const Vector& v);

  bool same_values(const Hyperparameters& other) const;

  /// Exponentiated values must be strictly positive and finite.
  void validate() const;
};

/// Training inputs (N x D sampling locations) and their noisy observations.
struct Dataset {
  Matrix inputs;
  Vector targets;

  Dataset() = default;
  Dataset(Matrix x, Vector y) : inputs(std::move(x)), targets(std::move(y)) {}

  Index size() const { return inputs.rows(); }
  Index dim() const { return inputs.cols(); }
  bool empty() const { return inputs.rows() == 0; }

  void validate() const;

  /// Row-wise concatenation in arrival order.
  static Dataset concat(const Dataset& a, const Dataset& b);
};

/// Per-query posterior marginals. variance_f is the latent-function
/// variance; variance_y additionally includes the observation noise.
struct Prediction {
  Vector mean;
  Vector variance_f;
  Vector variance_y;
};

/// Scalar objective (log marginal likelihood or an ELBO) together with its
/// gradient over the flattened free parameters.
struct Objective {
  double value = 0.0;
  Vector gradient;
};

}  // namespace streamgp

#endif  // STREAMGP_TYPES_HPP
