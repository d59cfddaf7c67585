#ifndef STREAMGP_SPARSE_GP_HPP
#define STREAMGP_SPARSE_GP_HPP

#include "streamgp/types.hpp"

namespace streamgp {

/// Sparse approximate posterior: pseudo-inputs Z together with the
/// variational Gaussian q(u) = N(q_mean, q_cov) over their latent values,
/// plus the hyperparameters the state was produced under.
struct SparseState {
  Matrix pseudo_inputs;          // M x D
  Vector q_mean;                 // M
  Matrix q_cov;                  // M x M, symmetric positive definite
  Hyperparameters hp_snapshot;
  Matrix prior_cached;           // K(Z, Z | hp_snapshot), no jitter

  // The posterior's information increment over its prior, recorded by the
  // factory functions while the factorizations that produced q are still
  // at hand. Everything is kept in the whitened basis of info_whitener,
  // the lower factor L L^T = K (+ jitter) the state was built with:
  //   info_gain  = L^T (S^-1 - K^-1) L   (M x M, positive semi-definite)
  //   info_shift = L^T S^-1 m            (M)
  //   info_const = -1/2 m^T S^-1 m - 1/2 log|S| + 1/2 log|K|
  // Whitened, the increment is bounded by the information the data
  // actually carry; unwhitened it scales with 1/lambda_min(K), and every
  // later contraction against it would inherit that magnitude as noise.
  // Consumers prefer the cache and fall back to reconstruction from q
  // when it is empty (hand-assembled states).
  Matrix info_gain;
  Vector info_shift;
  Matrix info_whitener;
  double info_const = 0.0;

  Index pseudo_count() const { return pseudo_inputs.rows(); }
  void validate() const;
};

// Parameter packing shared by every sparse objective: the flattened free
// vector is [log sf2, log ell_1..D, log sy2, Z row-major].
Vector pack_params(const Hyperparameters& hp, const Matrix& z);
void unpack_params(const Vector& v, Index m, Index d, Hyperparameters& hp,
                   Matrix& z);

/// Collapsed variational lower bound on log p(y):
///   log N(y; 0, Q_NN + sy2 I) - 1/(2 sy2) tr(K_NN - Q_NN),
/// Q_NN = K_NZ K_ZZ^-1 K_ZN. Gradient over [log hp, vec(Z)].
Objective vsgp_elbo(const Dataset& data, const Matrix& z,
                    const Hyperparameters& hp);

/// Closed-form maximizing q(u) for the bound above:
///   S = K_ZZ B^-1-composed covariance, m = sy2^-1 K_ZZ Sigma^-1 K_ZN y.
/// With no data this is the prior N(0, K_ZZ).
SparseState vsgp_optimal_q(const Dataset& data, const Matrix& z,
                           const Hyperparameters& hp);

/// FITC approximate log marginal likelihood: Gaussian log-density of y
/// under Q_NN + diag(K_NN - Q_NN) + sy2 I. Gradient over [log hp, vec(Z)].
Objective spgp_log_marginal_likelihood(const Dataset& data, const Matrix& z,
                                       const Hyperparameters& hp);

/// Posterior q(u) of the FITC model, packaged the same way as the
/// variational state so prediction goes through sparse_predict.
SparseState spgp_fit_state(const Dataset& data, const Matrix& z,
                           const Hyperparameters& hp);

/// Predicts through the assumed posterior q(f) = p(f|u) q(u):
///   mean = K_qZ K_ZZ^-1 m
///   var_f = k(x,x) - K_qZ K_ZZ^-1 K_Zq + K_qZ K_ZZ^-1 S K_ZZ^-1 K_Zq
Prediction sparse_predict(const SparseState& state, const Hyperparameters& hp,
                          const Matrix& queries);

}  // namespace streamgp

#endif  // STREAMGP_SPARSE_GP_HPP
