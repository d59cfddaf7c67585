#ifndef STREAMGP_EXACT_GP_HPP
#define STREAMGP_EXACT_GP_HPP

#include "streamgp/types.hpp"

namespace streamgp {

// Dense GP regression: O(N^3) training, used both as a baseline model and
// as the reference the sparse approximations are checked against.

/// log p(y) = -1/2 y^T K^-1 y - 1/2 log|K| - N/2 log(2 pi), K = K_NN + sy2 I.
/// Gradient over [log sf2, log ell_1..D, log sy2] via the trace identity
/// d log p / d theta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta).
Objective gpr_log_marginal_likelihood(const Dataset& data,
                                      const Hyperparameters& hp);

/// Posterior mean and marginal variances at the query rows. An empty
/// dataset yields the prior (mean 0, variance_f = sf2).
Prediction gpr_predict(const Dataset& data, const Hyperparameters& hp,
                       const Matrix& queries);

/// Sliding-window accumulation: appends the batch, keeps only the most
/// recent `window` pairs in arrival order.
Dataset gpr_window_update(const Dataset& state, const Dataset& batch,
                          Index window = 500);

}  // namespace streamgp

#endif  // STREAMGP_EXACT_GP_HPP
