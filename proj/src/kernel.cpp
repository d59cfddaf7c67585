#include "streamgp/kernel.hpp"

#include <cmath>

namespace streamgp {

namespace {

void check_dims(Index d1, Index d2, const Hyperparameters& hp) {
  if (d1 != d2 || d1 != hp.input_dim()) {
    throw std::invalid_argument("kernel: input dimension mismatch");
  }
}

}  // namespace

double kernel_eval(const Vector& a, const Vector& b,
                   const Hyperparameters& hp) {
  check_dims(a.size(), b.size(), hp);
  if (!a.allFinite() || !b.allFinite()) {
    throw std::invalid_argument("kernel_eval: non-finite input");
  }
  const Vector inv_ell = (-hp.log_lengthscales).array().exp();
  const double sq = ((a - b).array() * inv_ell.array()).square().sum();
  return hp.signal_variance() * std::exp(-0.5 * sq);
}

Matrix kernel_matrix(const Matrix& x1, const Matrix& x2,
                     const Hyperparameters& hp) {
  check_dims(x1.cols(), x2.cols(), hp);
  const double sf2 = hp.signal_variance();
  const Vector inv_ell = (-hp.log_lengthscales).array().exp();
  Matrix k(x1.rows(), x2.rows());
  for (Index j = 0; j < x2.rows(); ++j) {
    const Vector xj = x2.row(j);
    for (Index i = 0; i < x1.rows(); ++i) {
      const double sq =
          ((x1.row(i).transpose() - xj).array() * inv_ell.array())
              .square()
              .sum();
      k(i, j) = sf2 * std::exp(-0.5 * sq);
    }
  }
  return k;
}

Vector kernel_diag(const Matrix& x, const Hyperparameters& hp) {
  check_dims(x.cols(), x.cols(), hp);
  return Vector::Constant(x.rows(), hp.signal_variance());
}

std::vector<Matrix> kernel_gradients(const Matrix& x1, const Matrix& x2,
                                     const Hyperparameters& hp) {
  const Matrix k = kernel_matrix(x1, x2, hp);
  std::vector<Matrix> grads;
  grads.reserve(1 + hp.input_dim());
  // k is linear in sf2, so d/dlog sf2 is k itself.
  grads.push_back(k);
  const Vector inv_ell2 = (-2.0 * hp.log_lengthscales).array().exp();
  for (Index d = 0; d < hp.input_dim(); ++d) {
    Matrix g(x1.rows(), x2.rows());
    for (Index j = 0; j < x2.rows(); ++j) {
      for (Index i = 0; i < x1.rows(); ++i) {
        const double diff = x1(i, d) - x2(j, d);
        g(i, j) = k(i, j) * diff * diff * inv_ell2(d);
      }
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

Vector kernel_hyper_contract(const Matrix& x1, const Matrix& x2,
                             const Matrix& k, const Matrix& adj,
                             const Hyperparameters& hp) {
  Vector out = Vector::Zero(1 + hp.input_dim());
  out(0) = (adj.array() * k.array()).sum();
  const Vector inv_ell2 = (-2.0 * hp.log_lengthscales).array().exp();
  for (Index d = 0; d < hp.input_dim(); ++d) {
    double acc = 0.0;
    for (Index j = 0; j < x2.rows(); ++j) {
      for (Index i = 0; i < x1.rows(); ++i) {
        const double diff = x1(i, d) - x2(j, d);
        acc += adj(i, j) * k(i, j) * diff * diff * inv_ell2(d);
      }
    }
    out(1 + d) = acc;
  }
  return out;
}

Matrix kernel_input_grad_first(const Matrix& x1, const Matrix& x2,
                               const Matrix& k, const Matrix& adj,
                               const Hyperparameters& hp) {
  const Vector inv_ell2 = (-2.0 * hp.log_lengthscales).array().exp();
  Matrix g = Matrix::Zero(x1.rows(), hp.input_dim());
  for (Index j = 0; j < x2.rows(); ++j) {
    for (Index i = 0; i < x1.rows(); ++i) {
      const double w = adj(i, j) * k(i, j);
      for (Index d = 0; d < hp.input_dim(); ++d) {
        g(i, d) += w * (x2(j, d) - x1(i, d)) * inv_ell2(d);
      }
    }
  }
  return g;
}

Matrix kernel_input_grad_second(const Matrix& x1, const Matrix& x2,
                                const Matrix& k, const Matrix& adj,
                                const Hyperparameters& hp) {
  const Vector inv_ell2 = (-2.0 * hp.log_lengthscales).array().exp();
  Matrix g = Matrix::Zero(x2.rows(), hp.input_dim());
  for (Index j = 0; j < x2.rows(); ++j) {
    for (Index i = 0; i < x1.rows(); ++i) {
      const double w = adj(i, j) * k(i, j);
      for (Index d = 0; d < hp.input_dim(); ++d) {
        g(j, d) += w * (x1(i, d) - x2(j, d)) * inv_ell2(d);
      }
    }
  }
  return g;
}

Matrix kernel_input_grad_sym(const Matrix& x, const Matrix& k,
                             const Matrix& adj, const Hyperparameters& hp) {
  const Vector inv_ell2 = (-2.0 * hp.log_lengthscales).array().exp();
  Matrix g = Matrix::Zero(x.rows(), hp.input_dim());
  for (Index j = 0; j < x.rows(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      // row i enters entry (i, j) as the first argument and entry (j, i)
      // as the second; both derivatives point along x_j - x_i.
      const double w = (adj(i, j) + adj(j, i)) * k(i, j);
      for (Index d = 0; d < hp.input_dim(); ++d) {
        g(i, d) += w * (x(j, d) - x(i, d)) * inv_ell2(d);
      }
    }
  }
  return g;
}

}  // namespace streamgp
