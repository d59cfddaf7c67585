#include "streamgp/exact_gp.hpp"

#include <cmath>
#include <numbers>

#include "streamgp/kernel.hpp"
#include "streamgp/linalg.hpp"

namespace streamgp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

Objective gpr_log_marginal_likelihood(const Dataset& data,
                                      const Hyperparameters& hp) {
  data.validate();
  hp.validate();
  if (data.empty()) {
    throw std::invalid_argument("gpr_log_marginal_likelihood: empty dataset");
  }
  const Index n = data.size();
  const double sy2 = hp.noise_variance();

  Matrix k = kernel_matrix(data.inputs, data.inputs, hp);
  k.diagonal().array() += sy2;
  const CholeskyFactor chol = robust_cholesky(k);

  const Vector alpha = chol.solve(data.targets);

  Objective out;
  out.value = -0.5 * data.targets.dot(alpha) - 0.5 * chol.log_det() -
              0.5 * static_cast<double>(n) * kLog2Pi;

  // W = alpha alpha^T - K^-1; grad_theta = 1/2 sum(W .* dK/dtheta)
  const Matrix w = alpha * alpha.transpose() - chol.inverse();
  const auto dk = kernel_gradients(data.inputs, data.inputs, hp);

  out.gradient.resize(hp.free_count());
  for (Index j = 0; j < hp.input_dim() + 1; ++j) {
    out.gradient(j) = 0.5 * (w.array() * dk[static_cast<size_t>(j)].array()).sum();
  }
  out.gradient(hp.free_count() - 1) = 0.5 * sy2 * w.trace();
  return out;
}

Prediction gpr_predict(const Dataset& data, const Hyperparameters& hp,
                       const Matrix& queries) {
  hp.validate();
  if (queries.cols() != hp.input_dim()) {
    throw std::invalid_argument("gpr_predict: query dimension mismatch");
  }
  const Index q = queries.rows();
  const double sf2 = hp.signal_variance();
  const double sy2 = hp.noise_variance();

  Prediction pred;
  pred.mean = Vector::Zero(q);
  pred.variance_f = Vector::Constant(q, sf2);
  if (!data.empty()) {
    data.validate();
    Matrix k = kernel_matrix(data.inputs, data.inputs, hp);
    k.diagonal().array() += sy2;
    const CholeskyFactor chol = robust_cholesky(k);
    const Vector alpha = chol.solve(data.targets);

    // chunked so the Q x N cross-covariance never exceeds a fixed footprint
    const Index chunk = 1024;
    for (Index start = 0; start < q; start += chunk) {
      const Index len = std::min(chunk, q - start);
      const Matrix ks =
          kernel_matrix(queries.middleRows(start, len), data.inputs, hp);
      pred.mean.segment(start, len) = ks * alpha;
      const Matrix v = chol.solve_lower(ks.transpose());
      pred.variance_f.segment(start, len) -=
          v.colwise().squaredNorm().transpose();
    }
    pred.variance_f = pred.variance_f.cwiseMax(0.0);
  }
  pred.variance_y = pred.variance_f.array() + sy2;
  return pred;
}

Dataset gpr_window_update(const Dataset& state, const Dataset& batch,
                          Index window) {
  if (window < 1) {
    throw std::invalid_argument("gpr_window_update: window must be positive");
  }
  Dataset all = Dataset::concat(state, batch);
  if (all.size() <= window) {
    return all;
  }
  Dataset out;
  out.inputs = all.inputs.bottomRows(window);
  out.targets = all.targets.tail(window);
  return out;
}

}  // namespace streamgp
