#ifndef STREAMGP_LINALG_HPP
#define STREAMGP_LINALG_HPP

#include "streamgp/types.hpp"

namespace streamgp {

/// Lower-triangular Cholesky factor of A + jitter * I.
struct CholeskyFactor {
  Matrix lower;
  double jitter = 0.0;

  /// 2 * sum(log(diag(L))) = log |A + jitter I|
  double log_det() const;

  /// L^{-1} B via forward substitution.
  Matrix solve_lower(const Matrix& b) const;
  /// L^{-T} B via back substitution.
  Matrix solve_lower_transpose(const Matrix& b) const;
  /// (L L^T)^{-1} B.
  Matrix solve(const Matrix& b) const;
  /// (L L^T)^{-1} as a dense matrix.
  Matrix inverse() const;
};

/// Cholesky with escalating jitter. Tries the matrix as given first, then
/// jitter = 1e-8 * mean(diag) escalating by x10 up to 1e-2 * mean(diag).
/// Throws NumericalError (carrying the final jitter) if all levels fail.
CholeskyFactor robust_cholesky(const Matrix& a);

}  // namespace streamgp

#endif  // STREAMGP_LINALG_HPP
