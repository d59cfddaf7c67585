#include "streamgp/linalg.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace streamgp {

double CholeskyFactor::log_det() const {
  return 2.0 * lower.diagonal().array().log().sum();
}

Matrix CholeskyFactor::solve_lower(const Matrix& b) const {
  return lower.triangularView<Eigen::Lower>().solve(b);
}

Matrix CholeskyFactor::solve_lower_transpose(const Matrix& b) const {
  return lower.transpose().triangularView<Eigen::Upper>().solve(b);
}

Matrix CholeskyFactor::solve(const Matrix& b) const {
  return solve_lower_transpose(solve_lower(b));
}

Matrix CholeskyFactor::inverse() const {
  return solve(Matrix::Identity(lower.rows(), lower.rows()));
}

CholeskyFactor robust_cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("robust_cholesky: matrix is not square");
  }
  if (!a.allFinite()) {
    throw std::invalid_argument("robust_cholesky: matrix has non-finite entries");
  }
  if (!a.isApprox(a.transpose(), 1e-10)) {
    throw std::invalid_argument("robust_cholesky: matrix is not symmetric");
  }

  const double diag_mean = a.rows() > 0 ? a.diagonal().mean() : 0.0;
  const double scale = diag_mean > 0.0 ? diag_mean : 1.0;

  double jitter = 0.0;
  for (;;) {
    Matrix attempt = a;
    if (jitter > 0.0) {
      attempt.diagonal().array() += jitter;
    }
    Eigen::LLT<Matrix> llt(attempt);
    if (llt.info() == Eigen::Success) {
      return CholeskyFactor{llt.matrixL(), jitter};
    }
    if (jitter == 0.0) {
      jitter = 1e-8 * scale;
    } else if (jitter < 1e-2 * scale * 0.99) {
      jitter *= 10.0;
    } else {
      throw NumericalError("robust_cholesky: factorization failed at maximum jitter",
                           jitter);
    }
  }
}

}  // namespace streamgp
