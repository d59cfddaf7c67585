#ifndef STREAMGP_STREAMING_GP_HPP
#define STREAMGP_STREAMING_GP_HPP

#include "streamgp/optimizer.hpp"
#include "streamgp/sparse_gp.hpp"
#include "streamgp/types.hpp"

namespace streamgp {

struct SsgpConfig {
  OptimizerConfig optimizer;
  /// Pseudo-point count to grow toward on update; 0 keeps the current
  /// count. Growth per batch is capped by the batch size, with the new
  /// points taken from the batch inputs.
  Index target_pseudo_count = 0;
  bool optimize_hyperparameters = true;
  bool optimize_pseudo_inputs = true;

  void validate() const;
};

struct SsgpUpdateResult {
  SparseState state;
  Objective objective;    // streaming bound at the returned parameters
  OptimizationResult opt; // converged flag doubles as the warning channel
};

/// Greedy farthest-point selection: appends add_count rows of candidates to
/// z, each chosen to maximize the minimum lengthscale-normalized distance
/// to the points already kept. Deterministic (first index wins ties).
Matrix grow_pseudo_inputs(const Matrix& z, const Matrix& candidates,
                          Index add_count, const Vector& lengthscales);

/// First-batch fit: jointly optimizes the batch variational bound over
/// hyperparameters and pseudo-inputs from (z0, hp0), then stores the
/// closed-form optimal q. The batch must be non-empty.
SsgpUpdateResult ssgp_init(const Dataset& batch, const Matrix& z0,
                           const Hyperparameters& hp0,
                           const SsgpConfig& config);

/// Streaming lower bound on the online marginal likelihood for a new batch
/// given the previous approximate posterior. The previous posterior enters
/// as the correction q_old(a) / p(a | theta_old), evaluated under the old
/// state's hyperparameter snapshot; everything else uses hp_new. Value is
/// the bound collapsed over q(b); gradient is over [log hp_new, vec(Z_new)].
Objective ssgp_elbo(const SparseState& state_old, const Dataset& batch,
                    const Matrix& z_new, const Hyperparameters& hp_new);

/// Closed-form optimal q(b) of the streaming bound at fixed (Z_new, hp_new).
SparseState ssgp_posterior(const SparseState& state_old, const Dataset& batch,
                           const Matrix& z_new, const Hyperparameters& hp_new);

/// One streaming step: grows the pseudo-point set toward the configured
/// target, optimizes the streaming bound over whatever the config leaves
/// free, and returns the posterior state under the optimized parameters.
SsgpUpdateResult ssgp_update(const SparseState& state_old, const Dataset& batch,
                             const SsgpConfig& config);

}  // namespace streamgp

#endif  // STREAMGP_STREAMING_GP_HPP
