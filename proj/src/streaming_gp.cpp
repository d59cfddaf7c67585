#include "streamgp/streaming_gp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "streamgp/kernel.hpp"
#include "streamgp/linalg.hpp"

namespace streamgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// The old posterior enters the bound only through this package, all
// evaluated under the old state's hyperparameter snapshot and kept in the
// whitened basis of la, the lower factor L_a L_a^T = K_aa (+ jitter):
//   gain  = L_a^T (S_a^-1 - K_aa^-1) L_a  (how much q_old sharpened the prior)
//   shift = L_a^T S_a^-1 m_a
//   c1    = -1/2 m_a^T S_a^-1 m_a - 1/2 log|S_a| + 1/2 log|K_aa|
// Whitened, gain and shift are bounded by the information the data carry
// (order N/sy2); the explicit S_a^-1 - K_aa^-1 instead scales with
// 1/lambda_min(K_aa), and once K_aa is rank-deficient every contraction
// against it turns into cancellation noise of that magnitude.
struct OldCorrection {
  Matrix gain;
  Vector shift;
  Matrix la;      // lower factor gain/shift are whitened against
  double c1 = 0.0;
};

// The robust_cholesky ladder, but a level is accepted only once the
// smallest pivot clears a relative floor. A bare LLT can succeed with its
// last pivots at roundoff, and every solve through such a factor amplifies
// noise by cond(A). That is survivable in a one-shot fit, but streaming
// feeds each posterior back through the next bound, so unresolvable
// directions must be regularized rather than inverted.
CholeskyFactor conditioned_cholesky(const Matrix& a) {
  const double scale = a.diagonal().mean();
  const double pivot_floor = std::sqrt(1e-10 * scale);
  Eigen::LLT<Matrix> llt;
  double delta = 0.0;
  for (;;) {
    Matrix work = a;
    work.diagonal().array() += delta;
    llt.compute(work);
    if (llt.info() == Eigen::Success &&
        Vector(llt.matrixLLT().diagonal()).minCoeff() > pivot_floor) {
      break;
    }
    if (delta >= 1e-2 * scale * 0.99) {
      throw NumericalError("conditioned_cholesky: factorization failed",
                           delta);
    }
    delta = delta == 0.0 ? 1e-8 * scale : delta * 10.0;
  }
  CholeskyFactor f;
  f.lower = llt.matrixL();
  f.jitter = delta;
  return f;
}

// States produced by the factory functions carry the whitened increment
// directly. Everything else reconstructs it through the whitened posterior
// W = L^-1 (S_a + delta I) L^-T where L L^T = K_aa + delta I, so that
// gain = W^-1 - I comes from W's spectrum alone and W = I exactly
// whenever q_old is still the prior, whatever delta the ladder chose.
OldCorrection old_correction(const SparseState& old_state) {
  const Index m = old_state.pseudo_count();
  if (old_state.info_gain.rows() == m && old_state.info_shift.size() == m &&
      old_state.info_whitener.rows() == m) {
    OldCorrection oc;
    oc.gain = old_state.info_gain;
    oc.shift = old_state.info_shift;
    oc.la = old_state.info_whitener;
    oc.c1 = old_state.info_const;
    return oc;
  }

  const CholeskyFactor chol_k = conditioned_cholesky(old_state.prior_cached);
  Matrix s_shifted = old_state.q_cov;
  s_shifted.diagonal().array() += chol_k.jitter;
  const Matrix ls = chol_k.solve_lower(s_shifted);
  const Matrix w_raw = chol_k.solve_lower(ls.transpose());

  // Sharpening per whitened direction: d = 1/w - 1, non-negative in exact
  // arithmetic. Finite optimization can leave W marginally above I, so
  // values below -1e-8 are clamped up to 1e-8 and the rest of the negative
  // tail is dropped. The floor on w matches the whitener's resolution
  // (cond <= 1e10 times machine epsilon): anything below it would claim
  // more precision than the factorization can represent, and those
  // phantom digits are exactly what a later bound evaluation cancels
  // against.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (w_raw + w_raw.transpose()));
  Vector d = eig.eigenvalues();
  for (Index i = 0; i < d.size(); ++i) {
    double di = 1.0 / std::max(d(i), 1e-6) - 1.0;
    if (di < -1e-8) {
      di = 1e-8;
    } else if (di < 0.0) {
      di = 0.0;
    }
    d(i) = di;
  }

  // Mean tilt per whitened direction, filtered at the same resolution as
  // the precision: a direction with no measurable sharpening cannot have
  // measurably moved the mean either, yet roundoff leaves it a tilt of
  // order jitter^-1. Together with a near-flat quadratic that tilt forms a
  // pseudo-observation with an enormous peak, which a later update can
  // harvest as free evidence by rotating pseudo-inputs into it.
  Vector t = eig.eigenvectors().transpose() *
             chol_k.solve_lower(old_state.q_mean);
  for (Index i = 0; i < t.size(); ++i) {
    if (d(i) <= 1e-5) t(i) = 0.0;
  }
  const Vector tilt = (1.0 + d.array()) * t.array();

  OldCorrection oc;
  const Matrix gain_raw =
      eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
  oc.gain = 0.5 * (gain_raw + gain_raw.transpose());
  oc.shift = eig.eigenvectors() * tilt;
  oc.la = chol_k.lower;
  oc.c1 = -0.5 * t.dot(tilt) + 0.5 * d.array().log1p().sum();
  return oc;
}

// All factorizations shared by the bound value, its gradient, and the
// closed-form posterior, under (Z_new, hp_new), with the old increment in
// its whitened basis throughout:
//   L_b L_b^T = K_bb (+ jitter)
//   T  = L_b^-1 K_ba L_a^-T   (whitened both sides; a contraction for
//                              exact factors, so T gain T^T never exceeds
//                              the information gain actually recorded)
//   Vf = L_b^-1 K_bf
//   B  = I + T gain T^T + sy2^-1 Vf Vf^T
//   p  = T shift + sy2^-1 Vf y
//   Wa = L_a^-1 K_aa(hp_new) L_a^-T
struct StreamWork {
  OldCorrection oc;
  Matrix x;       // batch inputs, shaped 0 x D when the batch is empty
  Matrix kbb;     // plain kernel matrix, no jitter
  Matrix kba;     // M_b x M_a
  Matrix kbf;     // M_b x N
  Matrix t, vf;
  Matrix wa;      // M_a x M_a
  Matrix b_gain;  // B - I, positive semi-definite by construction
  Vector knn, p;
  CholeskyFactor chol_zb;  // of K_bb (+ jitter)
  CholeskyFactor chol_b;   // of B
  double sy2 = 0.0;
};

StreamWork stream_factorize(const SparseState& state_old, const Dataset& batch,
                            const Matrix& z_new, const Hyperparameters& hp_new) {
  StreamWork w;
  w.oc = old_correction(state_old);
  w.x = batch.empty() ? Matrix(0, z_new.cols()) : batch.inputs;
  w.sy2 = hp_new.noise_variance();
  w.kbb = kernel_matrix(z_new, z_new, hp_new);
  w.chol_zb = conditioned_cholesky(w.kbb);
  w.kba = kernel_matrix(z_new, state_old.pseudo_inputs, hp_new);
  w.kbf = kernel_matrix(z_new, w.x, hp_new);
  w.vf = w.chol_zb.solve_lower(w.kbf);
  w.knn = kernel_diag(w.x, hp_new);

  const auto la = w.oc.la.triangularView<Eigen::Lower>();
  Matrix half = w.kba.transpose();  // K_ab
  la.solveInPlace(half);
  w.t = w.chol_zb.solve_lower(Matrix(half.transpose()));

  Matrix wa_half =
      kernel_matrix(state_old.pseudo_inputs, state_old.pseudo_inputs, hp_new);
  la.solveInPlace(wa_half);
  Matrix wa_full = wa_half.transpose();
  la.solveInPlace(wa_full);
  w.wa = 0.5 * (wa_full + wa_full.transpose());

  Matrix g = w.t * w.oc.gain * w.t.transpose();
  g.noalias() += w.vf * w.vf.transpose() / w.sy2;
  w.b_gain = 0.5 * (g + g.transpose());
  w.chol_b = robust_cholesky(
      Matrix::Identity(z_new.rows(), z_new.rows()) + w.b_gain);

  w.p = w.t * w.oc.shift + w.vf * batch.targets / w.sy2;
  return w;
}

void check_stream_args(const SparseState& state_old, const Dataset& batch,
                       const Matrix& z_new, const Hyperparameters& hp_new) {
  hp_new.validate();
  if (!batch.empty()) batch.validate();
  if (z_new.rows() < 1 || z_new.cols() != hp_new.input_dim() ||
      state_old.pseudo_inputs.cols() != z_new.cols()) {
    throw std::invalid_argument("ssgp: inconsistent pseudo-input shapes");
  }
}

}  // namespace

void SsgpConfig::validate() const {
  optimizer.validate();
  if (target_pseudo_count < 0) {
    throw std::invalid_argument("SsgpConfig: negative target_pseudo_count");
  }
}

Matrix grow_pseudo_inputs(const Matrix& z, const Matrix& candidates,
                          Index add_count, const Vector& lengthscales) {
  if (add_count <= 0) return z;
  if (add_count > candidates.rows()) {
    throw std::invalid_argument("grow_pseudo_inputs: not enough candidates");
  }
  const Vector inv_ell2 = lengthscales.array().square().inverse();

  // min over kept points of the normalized squared distance, per candidate
  Vector min_d2 =
      Vector::Constant(candidates.rows(), std::numeric_limits<double>::max());
  auto account = [&](const Vector& point) {
    for (Index c = 0; c < candidates.rows(); ++c) {
      const Vector diff = candidates.row(c).transpose() - point;
      min_d2(c) = std::min(min_d2(c), diff.array().square().matrix().dot(inv_ell2));
    }
  };
  for (Index i = 0; i < z.rows(); ++i) account(z.row(i));

  Matrix out(z.rows() + add_count, z.cols());
  out.topRows(z.rows()) = z;
  for (Index k = 0; k < add_count; ++k) {
    Index best = 0;
    min_d2.maxCoeff(&best);
    out.row(z.rows() + k) = candidates.row(best);
    account(candidates.row(best));
    min_d2(best) = -1.0;  // never re-selected
  }
  return out;
}

Objective ssgp_elbo(const SparseState& state_old, const Dataset& batch,
                    const Matrix& z_new, const Hyperparameters& hp_new) {
  check_stream_args(state_old, batch, z_new, hp_new);
  const StreamWork w = stream_factorize(state_old, batch, z_new, hp_new);
  const Index n = batch.size();
  const Index mb = z_new.rows();
  const double sy2 = w.sy2;
  const Vector& y = batch.targets;

  const Vector q_nn = w.vf.colwise().squaredNorm();
  const double knn_sum = w.knn.sum();

  // tr(D_a (K_aa - Q_aa)) contracted in the whitened basis: gain is
  // bounded and Wa - T^T T is an O(1) residual, so the product never has
  // to cancel large intermediates the way D_a against K_aa would.
  const Matrix res_aa = w.wa - w.t.transpose() * w.t;
  const double trace_cor = (w.oc.gain.array() * res_aa.array()).sum();

  Objective out;
  out.value = 0.5 * w.chol_b.solve_lower(w.p).squaredNorm() -
              w.chol_b.lower.diagonal().array().log().sum() + w.oc.c1 -
              0.5 * trace_cor - 0.5 * n * (kLog2Pi + std::log(sy2)) -
              0.5 * y.squaredNorm() / sy2 - 0.5 * (knn_sum - q_nn.sum()) / sy2;

  // Gradient at the collapsed optimum: q(b) is exactly stationary there, so
  // differentiating the uncollapsed bound with q held at its closed form
  // gives the full derivative. With beta = B^-1 p and N = B^-1 + beta beta^T
  // the adjoints in whitened coordinates are
  //   wrt L_b^-1 K_bb L_b^-T : I - 1/2 (B + B^-1 + beta beta^T)
  //   wrt T                  : beta shift^T + (I - N) T gain
  //   wrt Vf                 : (beta y^T + (I - N) Vf) / sy2
  //   wrt Wa                 : -1/2 gain
  // all bounded by the recorded information, like the value itself.
  const Vector beta = w.chol_b.solve(w.p);
  const Matrix binv = w.chol_b.inverse();
  const Matrix i_mb = Matrix::Identity(mb, mb);
  const Matrix proj = i_mb - binv - beta * beta.transpose();  // I - N

  const Matrix g_bb_w = 0.5 * (i_mb - w.b_gain - binv - beta * beta.transpose());
  const Matrix g_t = beta * w.oc.shift.transpose() + proj * w.t * w.oc.gain;
  const Matrix g_vf = (beta * y.transpose() + proj * w.vf) / sy2;

  // Hyperparameter part: whiten each kernel tangent the same way the
  // quantity it perturbs was whitened, then contract. Solves per
  // hyperparameter instead of one shared adjoint matrix, because
  // unwhitening the adjoints would reintroduce the 1/lambda_min scale.
  const Matrix& x_old = state_old.pseudo_inputs;
  const auto la = w.oc.la.triangularView<Eigen::Lower>();
  const std::vector<Matrix> tan_bb = kernel_gradients(z_new, z_new, hp_new);
  const std::vector<Matrix> tan_ba = kernel_gradients(z_new, x_old, hp_new);
  const std::vector<Matrix> tan_bf = kernel_gradients(z_new, w.x, hp_new);
  const std::vector<Matrix> tan_aa = kernel_gradients(x_old, x_old, hp_new);

  Vector g_kernel(hp_new.input_dim() + 1);
  for (Index j = 0; j < g_kernel.size(); ++j) {
    const Matrix s_bb = w.chol_zb.solve_lower(
        Matrix(w.chol_zb.solve_lower(tan_bb[j]).transpose()));
    Matrix s_ba = tan_ba[j].transpose();
    la.solveInPlace(s_ba);
    const Matrix s_ba_w = w.chol_zb.solve_lower(Matrix(s_ba.transpose()));
    const Matrix s_bf = w.chol_zb.solve_lower(tan_bf[j]);
    Matrix s_aa = tan_aa[j];
    la.solveInPlace(s_aa);
    Matrix s_aa_w = s_aa.transpose();
    la.solveInPlace(s_aa_w);
    g_kernel(j) = (g_bb_w.array() * s_bb.array()).sum() +
                  (g_t.array() * s_ba_w.array()).sum() +
                  (g_vf.array() * s_bf.array()).sum() -
                  0.5 * (w.oc.gain.array() * s_aa_w.array()).sum();
  }
  g_kernel(0) += -knn_sum / (2.0 * sy2);

  const Vector r = y - w.vf.transpose() * beta;
  const double s3 = r.squaredNorm() + knn_sum - q_nn.sum() +
                    w.chol_b.solve_lower(w.vf).squaredNorm();
  const double g_sy2 = -0.5 * n / sy2 + s3 / (2.0 * sy2 * sy2);

  // Pseudo-input part through explicit adjoints, P = L_b^-T Ghat L_b^-1
  // with an extra L_a^-1 on the right for the cross block. These do
  // re-inflate with cond(K_bb), but only the Z rows of the gradient see
  // that noise; the bounded value and hyperparameter components above are
  // what the line search steers by.
  auto la_solve_t = [&](Matrix m) {
    w.oc.la.triangularView<Eigen::Lower>().transpose().solveInPlace(m);
    return m;
  };
  const Matrix p_bb = w.chol_zb.solve_lower_transpose(
      Matrix(w.chol_zb.solve_lower_transpose(g_bb_w).transpose()));
  const Matrix p_ba = w.chol_zb.solve_lower_transpose(
      Matrix(la_solve_t(g_t.transpose()).transpose()));
  const Matrix p_bf = w.chol_zb.solve_lower_transpose(g_vf);

  Matrix gz =
      kernel_input_grad_sym(z_new, w.kbb, p_bb, hp_new) +
      kernel_input_grad_second(x_old, z_new, w.kba.transpose(),
                               p_ba.transpose(), hp_new) +
      kernel_input_grad_second(w.x, z_new, w.kbf.transpose(),
                               p_bf.transpose(), hp_new);

  out.gradient.resize(hp_new.free_count() + z_new.size());
  out.gradient.head(hp_new.input_dim() + 1) = g_kernel;
  out.gradient(hp_new.free_count() - 1) = g_sy2 * sy2;
  for (Index i = 0; i < mb; ++i) {
    out.gradient.segment(hp_new.free_count() + i * z_new.cols(), z_new.cols()) =
        gz.row(i);
  }
  return out;
}

SparseState ssgp_posterior(const SparseState& state_old, const Dataset& batch,
                           const Matrix& z_new, const Hyperparameters& hp_new) {
  check_stream_args(state_old, batch, z_new, hp_new);
  const StreamWork w = stream_factorize(state_old, batch, z_new, hp_new);

  SparseState state;
  state.pseudo_inputs = z_new;
  state.hp_snapshot = hp_new;
  state.prior_cached = w.kbb;
  state.q_mean = w.chol_zb.lower * w.chol_b.solve(w.p);
  const Matrix s =
      w.chol_zb.lower * w.chol_b.solve(w.chol_zb.lower.transpose());
  state.q_cov = 0.5 * (s + s.transpose());

  // Same derivation as in vsgp_optimal_q: with S = L B^-1 L^T the
  // whitened increment is exactly (B - I, p), recorded now because
  // recovering it from q_cov later would difference two near-singular
  // inverses.
  state.info_gain = w.b_gain;
  state.info_shift = w.p;
  state.info_whitener = w.chol_zb.lower;
  state.info_const = -0.5 * w.chol_b.solve_lower(w.p).squaredNorm() +
                     0.5 * w.chol_b.log_det();
  return state;
}

namespace {

// Shared by init and update: minimize the negated bound over the packed
// [log hp, vec(Z)] vector, holding masked blocks at their start values.
SsgpUpdateResult optimize_packed(
    const std::function<Objective(const Matrix&, const Hyperparameters&)>& bound,
    const Matrix& z0, const Hyperparameters& hp0, const SsgpConfig& config) {
  const Index m = z0.rows();
  const Index d = z0.cols();
  const Index nh = hp0.free_count();

  SsgpUpdateResult result;
  if (!config.optimize_hyperparameters && !config.optimize_pseudo_inputs) {
    result.objective = bound(z0, hp0);
    result.opt.best_point = pack_params(hp0, z0);
    result.opt.best_value = -result.objective.value;
    result.opt.converged = true;
    result.opt.termination_reason = TerminationReason::gradient_small;
    return result;
  }

  // Numerical failures at trial points surface as +inf so the line search
  // backs off instead of aborting the whole update.
  const ObjectiveFn negated = [&](const Vector& x, Vector& grad) {
    Hyperparameters hp;
    Matrix z;
    unpack_params(x, m, d, hp, z);
    if (!config.optimize_hyperparameters) hp = hp0;
    if (!config.optimize_pseudo_inputs) z = z0;
    Objective obj;
    try {
      obj = bound(z, hp);
    } catch (const NumericalError&) {
      grad = Vector::Zero(x.size());
      return std::numeric_limits<double>::infinity();
    }
    grad = -obj.gradient;
    if (!config.optimize_hyperparameters) grad.head(nh).setZero();
    if (!config.optimize_pseudo_inputs) grad.tail(m * d).setZero();
    return -obj.value;
  };

  result.opt = minimize(negated, pack_params(hp0, z0), config.optimizer);

  Hyperparameters hp_best;
  Matrix z_best;
  unpack_params(result.opt.best_point, m, d, hp_best, z_best);
  if (!config.optimize_hyperparameters) hp_best = hp0;
  if (!config.optimize_pseudo_inputs) z_best = z0;
  result.objective = bound(z_best, hp_best);
  return result;
}

}  // namespace

SsgpUpdateResult ssgp_init(const Dataset& batch, const Matrix& z0,
                           const Hyperparameters& hp0,
                           const SsgpConfig& config) {
  config.validate();
  batch.validate();
  hp0.validate();
  if (batch.empty()) {
    throw std::invalid_argument("ssgp_init: empty first batch");
  }
  if (z0.rows() < 1 || z0.cols() != hp0.input_dim()) {
    throw std::invalid_argument("ssgp_init: bad initial pseudo-inputs");
  }

  SsgpUpdateResult result = optimize_packed(
      [&](const Matrix& z, const Hyperparameters& hp) {
        return vsgp_elbo(batch, z, hp);
      },
      z0, hp0, config);

  Hyperparameters hp_best;
  Matrix z_best;
  unpack_params(result.opt.best_point, z0.rows(), z0.cols(), hp_best, z_best);
  if (!config.optimize_hyperparameters) hp_best = hp0;
  if (!config.optimize_pseudo_inputs) z_best = z0;
  result.state = vsgp_optimal_q(batch, z_best, hp_best);
  return result;
}

SsgpUpdateResult ssgp_update(const SparseState& state_old, const Dataset& batch,
                             const SsgpConfig& config) {
  config.validate();
  state_old.hp_snapshot.validate();
  if (!batch.empty()) batch.validate();

  Matrix z_start = state_old.pseudo_inputs;
  if (config.target_pseudo_count > z_start.rows() && batch.size() > 0) {
    const Index add = std::min(config.target_pseudo_count - z_start.rows(),
                               batch.size());
    z_start = grow_pseudo_inputs(z_start, batch.inputs, add,
                                 state_old.hp_snapshot.lengthscales());
  }

  SsgpUpdateResult result = optimize_packed(
      [&](const Matrix& z, const Hyperparameters& hp) {
        return ssgp_elbo(state_old, batch, z, hp);
      },
      z_start, state_old.hp_snapshot, config);

  Hyperparameters hp_best;
  Matrix z_best;
  unpack_params(result.opt.best_point, z_start.rows(), z_start.cols(), hp_best,
                z_best);
  if (!config.optimize_hyperparameters) hp_best = state_old.hp_snapshot;
  if (!config.optimize_pseudo_inputs) z_best = z_start;
  result.state = ssgp_posterior(state_old, batch, z_best, hp_best);
  return result;
}

}  // namespace streamgp
