#include "streamgp/sparse_gp.hpp"

#include <cmath>

#include "streamgp/kernel.hpp"
#include "streamgp/linalg.hpp"

namespace streamgp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

void SparseState::validate() const {
  hp_snapshot.validate();
  const Index m = pseudo_inputs.rows();
  if (q_mean.size() != m || q_cov.rows() != m || q_cov.cols() != m ||
      prior_cached.rows() != m || prior_cached.cols() != m) {
    throw std::invalid_argument("SparseState: inconsistent shapes");
  }
  if (!q_cov.isApprox(q_cov.transpose(), 1e-8)) {
    throw std::invalid_argument("SparseState: q_cov not symmetric");
  }
  if (info_gain.size() > 0 &&
      (info_gain.rows() != m || info_gain.cols() != m ||
       info_shift.size() != m || info_whitener.rows() != m ||
       info_whitener.cols() != m)) {
    throw std::invalid_argument("SparseState: inconsistent information cache");
  }
  robust_cholesky(q_cov);  // throws if not factorizable
}

Vector pack_params(const Hyperparameters& hp, const Matrix& z) {
  const Index nh = hp.free_count();
  Vector v(nh + z.size());
  v.head(nh) = hp.to_vector();
  for (Index i = 0; i < z.rows(); ++i) {
    v.segment(nh + i * z.cols(), z.cols()) = z.row(i);
  }
  return v;
}

void unpack_params(const Vector& v, Index m, Index d, Hyperparameters& hp,
                   Matrix& z) {
  const Index nh = d + 2;
  if (v.size() != nh + m * d) {
    throw std::invalid_argument("unpack_params: wrong vector length");
  }
  hp = Hyperparameters::from_vector(v.head(nh));
  z.resize(m, d);
  for (Index i = 0; i < m; ++i) {
    z.row(i) = v.segment(nh + i * d, d);
  }
}

// Shared factorization work for the Titsias bound and its optimum:
//   L L^T = K_ZZ (+ jitter), V = L^-1 K_ZN,
//   B = I + V V^T / sy2, L_B L_B^T = B.
// The bound in these terms (with Q = V^T V):
//   log N(y; 0, Q + sy2 I) = -N/2 log(2 pi sy2) - sum log diag L_B
//                            - y^T y/(2 sy2) + c^T c / 2,
//   c = L_B^-1 V y / sy2,
// and the regularizer -1/(2 sy2) (sum k_nn - tr(V^T V)).
namespace {

struct VsgpWork {
  CholeskyFactor chol_z;   // of K_ZZ (+jitter)
  CholeskyFactor chol_b;   // of B
  Matrix kzz;              // plain kernel matrix, no jitter
  Matrix kzn;
  Matrix v;                // L^-1 K_ZN
  Vector knn;
  double sy2 = 0.0;
};

VsgpWork vsgp_factorize(const Dataset& data, const Matrix& z,
                        const Hyperparameters& hp) {
  VsgpWork w;
  w.sy2 = hp.noise_variance();
  w.kzz = kernel_matrix(z, z, hp);
  w.chol_z = robust_cholesky(w.kzz);
  w.kzn = kernel_matrix(z, data.inputs, hp);
  w.v = w.chol_z.solve_lower(w.kzn);
  w.knn = kernel_diag(data.inputs, hp);
  Matrix b = Matrix::Identity(z.rows(), z.rows());
  b.noalias() += w.v * w.v.transpose() / w.sy2;
  w.chol_b = robust_cholesky(b);
  return w;
}

}  // namespace

Objective vsgp_elbo(const Dataset& data, const Matrix& z,
                    const Hyperparameters& hp) {
  data.validate();
  hp.validate();
  if (z.rows() < 1) {
    throw std::invalid_argument("vsgp_elbo: need at least one pseudo-input");
  }
  if (z.cols() != hp.input_dim()) {
    throw std::invalid_argument("vsgp_elbo: pseudo-input dimension mismatch");
  }
  const Index n = data.size();
  const Index m = z.rows();
  const VsgpWork w = vsgp_factorize(data, z, hp);
  const double sy2 = w.sy2;
  const Vector& y = data.targets;

  const Vector vy = w.v * y;
  const Vector c = w.chol_b.solve_lower(vy) / sy2;
  const double tr_q = w.v.squaredNorm();

  Objective out;
  out.value = -0.5 * n * (kLog2Pi + std::log(sy2)) -
              w.chol_b.lower.diagonal().array().log().sum() -
              0.5 * y.squaredNorm() / sy2 + 0.5 * c.squaredNorm() -
              0.5 * w.knn.sum() / sy2 + 0.5 * tr_q / sy2;

  // Gradient via the adjoints of the direct form
  //   ELBO = log N(y; 0, G) - 1/(2 sy2) tr(K_NN - Q),  G = Q + sy2 I.
  // With P = G^-1 - beta beta^T (beta = G^-1 y) and W = K_ZZ^-1 K_ZN:
  //   d/dK_ZN = -W P + W / sy2
  //   d/dK_ZZ = 1/2 W P W^T - 1/(2 sy2) W W^T
  //   d/dk_nn = -1/(2 sy2),  d/dsy2 = -1/2 tr(P) + tr(K_NN - Q)/(2 sy2^2).
  // G^-1 is applied through Woodbury so nothing N x N is ever formed.
  const Matrix wmat = w.chol_z.solve_lower_transpose(w.v);
  const Vector beta = (y - w.v.transpose() * w.chol_b.solve(vy) / sy2) / sy2;
  const Matrix wvt = wmat * w.v.transpose();
  const Matrix binv_v = w.chol_b.solve(w.v);
  Matrix wp = (wmat - wvt * binv_v / sy2) / sy2;  // W G^-1
  wp.noalias() -= (wmat * beta) * beta.transpose();

  const Matrix adj_zn = -wp + wmat / sy2;
  const Matrix adj_zz =
      0.5 * wp * wmat.transpose() - wmat * wmat.transpose() / (2.0 * sy2);

  const double tr_binv = w.chol_b.inverse().trace();
  const double tr_p =
      (static_cast<double>(n - m) + tr_binv) / sy2 - beta.squaredNorm();
  const double s_adj = -0.5 * tr_p + (w.knn.sum() - tr_q) / (2.0 * sy2 * sy2);

  Vector g_kernel = kernel_hyper_contract(z, z, w.kzz, adj_zz, hp) +
                    kernel_hyper_contract(z, data.inputs, w.kzn, adj_zn, hp);
  g_kernel(0) += -w.knn.sum() / (2.0 * sy2);  // diag adjoint, sf2 only

  const Matrix gz = kernel_input_grad_sym(z, w.kzz, adj_zz, hp) +
                    kernel_input_grad_first(z, data.inputs, w.kzn, adj_zn, hp);

  out.gradient.resize(hp.free_count() + z.size());
  out.gradient.head(hp.input_dim() + 1) = g_kernel;
  out.gradient(hp.free_count() - 1) = s_adj * sy2;
  for (Index i = 0; i < m; ++i) {
    out.gradient.segment(hp.free_count() + i * z.cols(), z.cols()) = gz.row(i);
  }
  return out;
}

SparseState vsgp_optimal_q(const Dataset& data, const Matrix& z,
                           const Hyperparameters& hp) {
  hp.validate();
  if (!data.empty()) data.validate();
  if (z.cols() != hp.input_dim()) {
    throw std::invalid_argument("vsgp_optimal_q: pseudo-input dimension mismatch");
  }

  SparseState state;
  state.pseudo_inputs = z;
  state.hp_snapshot = hp;
  state.prior_cached = kernel_matrix(z, z, hp);

  const CholeskyFactor chol_z = robust_cholesky(state.prior_cached);
  if (data.empty()) {
    state.q_mean = Vector::Zero(z.rows());
    state.q_cov = chol_z.lower * chol_z.lower.transpose();
    state.info_gain = Matrix::Zero(z.rows(), z.rows());
    state.info_shift = Vector::Zero(z.rows());
    state.info_whitener = chol_z.lower;
    state.info_const = 0.0;
    return state;
  }

  const double sy2 = hp.noise_variance();
  const Matrix kzn = kernel_matrix(z, data.inputs, hp);
  const Matrix v = chol_z.solve_lower(kzn);
  const Matrix gain = v * v.transpose() / sy2;  // B - I, PSD
  const Matrix b = Matrix::Identity(z.rows(), z.rows()) + gain;
  const CholeskyFactor chol_b = robust_cholesky(b);

  // m = sy2^-1 L B^-1 V y,  S = L B^-1 L^T
  const Vector p = v * data.targets / sy2;
  state.q_mean = chol_z.lower * chol_b.solve(p);
  Matrix s = chol_z.lower * chol_b.solve(chol_z.lower.transpose());
  state.q_cov = 0.5 * (s + s.transpose());

  // In the whitened basis of chol_z the increment is exactly what the
  // factorization already produced: L^T (S^-1 - K^-1) L = B - I and
  // L^T S^-1 m = p. Stored as-is, per the cache contract on SparseState.
  state.info_gain = gain;
  state.info_shift = p;
  state.info_whitener = chol_z.lower;
  state.info_const =
      -0.5 * chol_b.solve_lower(p).squaredNorm() + 0.5 * chol_b.log_det();
  return state;
}

Objective spgp_log_marginal_likelihood(const Dataset& data, const Matrix& z,
                                       const Hyperparameters& hp) {
  data.validate();
  hp.validate();
  if (data.empty()) {
    throw std::invalid_argument("spgp_log_marginal_likelihood: empty dataset");
  }
  if (z.rows() < 1 || z.cols() != hp.input_dim()) {
    throw std::invalid_argument("spgp_log_marginal_likelihood: bad pseudo-inputs");
  }
  const Index n = data.size();
  const double sy2 = hp.noise_variance();
  const Vector& y = data.targets;

  const Matrix kzz = kernel_matrix(z, z, hp);
  const CholeskyFactor chol_z = robust_cholesky(kzz);
  const Matrix kzn = kernel_matrix(z, data.inputs, hp);
  const Matrix v = chol_z.solve_lower(kzn);
  const Vector knn = kernel_diag(data.inputs, hp);

  // FITC covariance G = Q + D with D = diag(k_nn - q_nn + sy2).
  const Vector q_nn = v.colwise().squaredNorm();
  const Vector d = (knn - q_nn).array() + sy2;
  if ((d.array() <= 0.0).any()) {
    throw NumericalError("spgp: non-positive FITC diagonal", 0.0);
  }
  const Vector d_inv = d.cwiseInverse();

  const Matrix vd = v * d_inv.asDiagonal();  // V D^-1
  Matrix b = Matrix::Identity(z.rows(), z.rows());
  b.noalias() += vd * v.transpose();
  const CholeskyFactor chol_b = robust_cholesky(b);

  // beta = G^-1 y through Woodbury on the diagonal D
  const Vector yd = y.cwiseProduct(d_inv);
  const Vector beta = yd - vd.transpose() * chol_b.solve(v * yd);

  Objective out;
  out.value = -0.5 * (chol_b.log_det() + d.array().log().sum()) -
              0.5 * y.dot(beta) - 0.5 * n * kLog2Pi;

  // Adjoints, with P = G^-1 - beta beta^T and Ptilde = P - Diag(diag P):
  //   d/dK_ZN = -W Ptilde,  d/dK_ZZ = 1/2 W Ptilde W^T,
  //   d/dk_nn = -1/2 diag(P),  d/dsy2 = -1/2 tr(P).
  // The diagonal of dQ feeds back through D, which is what removes the
  // diagonal from P in the Q adjoint.
  const Matrix wmat = chol_z.solve_lower_transpose(v);
  const Matrix u = chol_b.solve_lower(v);
  const Vector diag_ginv =
      d_inv.array() -
      u.colwise().squaredNorm().transpose().array() * d_inv.array().square();
  const Vector diag_p = diag_ginv.array() - beta.array().square();

  const Matrix wvdt = wmat * vd.transpose();
  Matrix wp = wmat * d_inv.asDiagonal() - wvdt * chol_b.solve(vd);  // W G^-1
  wp.noalias() -= (wmat * beta) * beta.transpose();
  const Matrix wpt = wp - wmat * diag_p.asDiagonal();

  const Matrix adj_zn = -wpt;
  const Matrix adj_zz = 0.5 * wpt * wmat.transpose();

  Vector g_kernel = kernel_hyper_contract(z, z, kzz, adj_zz, hp) +
                    kernel_hyper_contract(z, data.inputs, kzn, adj_zn, hp);
  g_kernel(0) += -0.5 * diag_p.dot(knn);

  const Matrix gz = kernel_input_grad_sym(z, kzz, adj_zz, hp) +
                    kernel_input_grad_first(z, data.inputs, kzn, adj_zn, hp);

  out.gradient.resize(hp.free_count() + z.size());
  out.gradient.head(hp.input_dim() + 1) = g_kernel;
  out.gradient(hp.free_count() - 1) = -0.5 * diag_p.sum() * sy2;
  for (Index i = 0; i < z.rows(); ++i) {
    out.gradient.segment(hp.free_count() + i * z.cols(), z.cols()) = gz.row(i);
  }
  return out;
}

SparseState spgp_fit_state(const Dataset& data, const Matrix& z,
                           const Hyperparameters& hp) {
  data.validate();
  hp.validate();

  SparseState state;
  state.pseudo_inputs = z;
  state.hp_snapshot = hp;
  state.prior_cached = kernel_matrix(z, z, hp);

  const CholeskyFactor chol_z = robust_cholesky(state.prior_cached);
  if (data.empty()) {
    state.q_mean = Vector::Zero(z.rows());
    state.q_cov = chol_z.lower * chol_z.lower.transpose();
    return state;
  }

  const double sy2 = hp.noise_variance();
  const Matrix kzn = kernel_matrix(z, data.inputs, hp);
  const Matrix v = chol_z.solve_lower(kzn);
  const Vector knn = kernel_diag(data.inputs, hp);
  const Vector q_nn = v.colwise().squaredNorm();
  const Vector d = (knn - q_nn).array() + sy2;
  if ((d.array() <= 0.0).any()) {
    throw NumericalError("spgp_fit_state: non-positive FITC diagonal", 0.0);
  }
  const Vector d_inv = d.cwiseInverse();

  const Matrix vd = v * d_inv.asDiagonal();
  Matrix b = Matrix::Identity(z.rows(), z.rows());
  b.noalias() += vd * v.transpose();
  const CholeskyFactor chol_b = robust_cholesky(b);

  state.q_mean = chol_z.lower * chol_b.solve(v * data.targets.cwiseProduct(d_inv));
  Matrix s = chol_z.lower * chol_b.solve(chol_z.lower.transpose());
  state.q_cov = 0.5 * (s + s.transpose());
  return state;
}

Prediction sparse_predict(const SparseState& state, const Hyperparameters& hp,
                          const Matrix& queries) {
  hp.validate();
  if (queries.cols() != hp.input_dim()) {
    throw std::invalid_argument("sparse_predict: query dimension mismatch");
  }
  const Matrix& z = state.pseudo_inputs;
  const Matrix kzz = hp.same_values(state.hp_snapshot)
                         ? state.prior_cached
                         : kernel_matrix(z, z, hp);
  const CholeskyFactor chol_z = robust_cholesky(kzz);
  const CholeskyFactor chol_s = robust_cholesky(state.q_cov);

  const Vector mw = chol_z.solve_lower(state.q_mean);
  const double sf2 = hp.signal_variance();
  const double sy2 = hp.noise_variance();

  const Index q = queries.rows();
  Prediction pred;
  pred.mean.resize(q);
  pred.variance_f.resize(q);

  const Index chunk = 2048;
  for (Index start = 0; start < q; start += chunk) {
    const Index len = std::min(chunk, q - start);
    const Matrix kqz = kernel_matrix(queries.middleRows(start, len), z, hp);
    const Matrix w = chol_z.solve_lower(kqz.transpose());  // M x len
    pred.mean.segment(start, len) = w.transpose() * mw;
    const Matrix t = chol_z.solve_lower_transpose(w);      // K_ZZ^-1 K_Zq
    const Matrix st = chol_s.lower.transpose() * t;
    pred.variance_f.segment(start, len) =
        sf2 - w.colwise().squaredNorm().transpose().array() +
        st.colwise().squaredNorm().transpose().array();
  }
  pred.variance_f = pred.variance_f.cwiseMax(0.0);
  pred.variance_y = pred.variance_f.array() + sy2;
  return pred;
}

}  // namespace streamgp
