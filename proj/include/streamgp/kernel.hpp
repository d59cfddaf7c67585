#ifndef STREAMGP_KERNEL_HPP
#define STREAMGP_KERNEL_HPP

#include <vector>

#include "streamgp/types.hpp"

namespace streamgp {

// Squared-exponential ARD kernel
//
//   k(a, b) = sf2 * exp(-1/2 sum_d ((a_d - b_d) / ell_d)^2)
//
// All gradients below are taken with respect to log-parameters, which is the
// parameterization every model optimizes in.

double kernel_eval(const Vector& a, const Vector& b, const Hyperparameters& hp);

/// Entry (i, j) = k(x1_i, x2_j). kernel_matrix(X, X, hp) is symmetric PSD.
Matrix kernel_matrix(const Matrix& x1, const Matrix& x2,
                     const Hyperparameters& hp);

/// Diagonal of kernel_matrix(x, x, hp); constant sf2 for this kernel.
Vector kernel_diag(const Matrix& x, const Hyperparameters& hp);

/// One matrix per kernel hyperparameter, in the order
/// [d/dlog sf2, d/dlog ell_1, ..., d/dlog ell_D]. The noise-variance
/// gradient is handled by the consuming model, not here.
std::vector<Matrix> kernel_gradients(const Matrix& x1, const Matrix& x2,
                                     const Hyperparameters& hp);

/// sum_ij adj_ij * dK_ij/dlog(theta) for each kernel hyperparameter,
/// returned in the kernel_gradients order. k is kernel_matrix(x1, x2, hp).
Vector kernel_hyper_contract(const Matrix& x1, const Matrix& x2,
                             const Matrix& k, const Matrix& adj,
                             const Hyperparameters& hp);

/// sum_ij adj_ij * dK_ij/dx1, an N1 x D matrix of input gradients.
Matrix kernel_input_grad_first(const Matrix& x1, const Matrix& x2,
                               const Matrix& k, const Matrix& adj,
                               const Hyperparameters& hp);

/// sum_ij adj_ij * dK_ij/dx2, an N2 x D matrix.
Matrix kernel_input_grad_second(const Matrix& x1, const Matrix& x2,
                                const Matrix& k, const Matrix& adj,
                                const Hyperparameters& hp);

/// Input gradient for the square case K = kernel_matrix(x, x, hp), where
/// each row of x appears as both arguments. adj need not be symmetric.
Matrix kernel_input_grad_sym(const Matrix& x, const Matrix& k,
                             const Matrix& adj, const Hyperparameters& hp);

}  // namespace streamgp

#endif  // STREAMGP_KERNEL_HPP
