#include "streamgp/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace streamgp {

void OptimizerConfig::validate() const {
  if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw std::invalid_argument("optimizer: need 0 < c1 < c2 < 1");
  }
  if (memory_pairs < 1) {
    throw std::invalid_argument("optimizer: memory_pairs must be >= 1");
  }
  if (max_iterations < 0 || gradient_tolerance <= 0.0) {
    throw std::invalid_argument("optimizer: bad iteration cap or tolerance");
  }
}

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::gradient_small: return "gradient_small";
    case TerminationReason::max_iterations: return "max_iterations";
    case TerminationReason::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Evaluation {
  double value = std::numeric_limits<double>::quiet_NaN();
  Vector gradient;
  bool finite() const { return std::isfinite(value) && gradient.allFinite(); }
};

Evaluation eval_at(const ObjectiveFn& f, const Vector& x) {
  Evaluation e;
  e.gradient.resize(x.size());
  e.value = f(x, e.gradient);
  return e;
}

struct LineSearchResult {
  bool ok = false;
  double step = 0.0;
  Vector x;
  Evaluation eval;
};

// Strong-Wolfe line search (bracketing phase plus zoom with bisection
// safeguarded by quadratic interpolation). Trial points with non-finite
// value or gradient are treated as overshoots and bracket the step from
// above, so they can never be accepted.
LineSearchResult wolfe_line_search(const ObjectiveFn& f, const Vector& x0,
                                   const Evaluation& e0, const Vector& dir,
                                   double step0, double c1, double c2) {
  LineSearchResult out;
  const double phi0 = e0.value;
  const double dphi0 = e0.gradient.dot(dir);
  if (!(dphi0 < 0.0)) {
    return out;  // not a descent direction
  }

  auto phi_at = [&](double alpha, Evaluation& e) {
    out.x = x0 + alpha * dir;
    e = eval_at(f, out.x);
  };

  auto zoom = [&](double lo, double phi_lo, double dphi_lo, double hi,
                  double phi_hi, bool hi_finite) -> bool {
    for (int it = 0; it < 40; ++it) {
      double alpha;
      if (hi_finite) {
        // quadratic through phi(lo), phi'(lo), phi(hi)
        const double dz = hi - lo;
        const double denom = 2.0 * (phi_hi - phi_lo - dphi_lo * dz);
        alpha = (denom != 0.0) ? lo - dphi_lo * dz * dz / denom : lo + 0.5 * dz;
        const double lo_guard = lo + 0.1 * dz;
        const double hi_guard = lo + 0.9 * dz;
        if (!std::isfinite(alpha) ||
            (dz > 0 && (alpha < lo_guard || alpha > hi_guard)) ||
            (dz < 0 && (alpha > lo_guard || alpha < hi_guard))) {
          alpha = lo + 0.5 * dz;
        }
      } else {
        alpha = lo + 0.5 * (hi - lo);
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) {
        return false;
      }
      Evaluation e;
      phi_at(alpha, e);
      if (!e.finite() || e.value > phi0 + c1 * alpha * dphi0 ||
          e.value >= phi_lo) {
        hi = alpha;
        phi_hi = e.value;
        hi_finite = e.finite();
        continue;
      }
      const double dphi = e.gradient.dot(dir);
      if (std::abs(dphi) <= -c2 * dphi0) {
        out.ok = true;
        out.step = alpha;
        out.eval = std::move(e);
        return true;
      }
      if (dphi * (hi - lo) >= 0.0) {
        hi = lo;
        phi_hi = phi_lo;
        hi_finite = true;
      }
      lo = alpha;
      phi_lo = e.value;
      dphi_lo = dphi;
    }
    return false;
  };

  double prev_alpha = 0.0;
  double prev_phi = phi0;
  double prev_dphi = dphi0;
  double alpha = step0;
  for (int it = 0; it < 30; ++it) {
    Evaluation e;
    phi_at(alpha, e);
    if (!e.finite() || e.value > phi0 + c1 * alpha * dphi0 ||
        (it > 0 && e.value >= prev_phi)) {
      zoom(prev_alpha, prev_phi, prev_dphi, alpha, e.value, e.finite());
      return out;
    }
    const double dphi = e.gradient.dot(dir);
    if (std::abs(dphi) <= -c2 * dphi0) {
      out.ok = true;
      out.step = alpha;
      out.eval = std::move(e);
      return out;
    }
    if (dphi >= 0.0) {
      zoom(alpha, e.value, dphi, prev_alpha, prev_phi, true);
      return out;
    }
    prev_alpha = alpha;
    prev_phi = e.value;
    prev_dphi = dphi;
    alpha *= 2.0;
  }
  return out;
}

}  // namespace

OptimizationResult minimize(const ObjectiveFn& objective, const Vector& start,
                            const OptimizerConfig& config) {
  config.validate();
  const Index n = start.size();

  Evaluation current = eval_at(objective, start);
  if (!current.finite()) {
    throw std::invalid_argument("minimize: objective non-finite at start point");
  }

  OptimizationResult result;
  result.best_point = start;
  result.best_value = current.value;

  Vector x = start;
  std::deque<std::pair<Vector, Vector>> pairs;  // (s, y) curvature history
  double gamma = 1.0;                           // initial Hessian scale

  for (int iter = 0; iter <= config.max_iterations; ++iter) {
    if (current.gradient.lpNorm<Eigen::Infinity>() < config.gradient_tolerance) {
      result.converged = true;
      result.termination_reason = TerminationReason::gradient_small;
      result.iterations_used = iter;
      return result;
    }
    if (iter == config.max_iterations) {
      break;
    }

    // two-loop recursion
    Vector q = current.gradient;
    std::vector<double> alpha_coef(pairs.size());
    for (Index i = static_cast<Index>(pairs.size()) - 1; i >= 0; --i) {
      const auto& [s, yv] = pairs[static_cast<size_t>(i)];
      const double rho = 1.0 / yv.dot(s);
      alpha_coef[static_cast<size_t>(i)] = rho * s.dot(q);
      q -= alpha_coef[static_cast<size_t>(i)] * yv;
    }
    q *= gamma;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, yv] = pairs[i];
      const double rho = 1.0 / yv.dot(s);
      const double beta = rho * yv.dot(q);
      q += (alpha_coef[i] - beta) * s;
    }
    Vector dir = -q;

    double dphi0 = current.gradient.dot(dir);
    if (!(dphi0 < 0.0)) {
      // fall back to steepest descent if curvature info went bad
      dir = -current.gradient;
      dphi0 = -current.gradient.squaredNorm();
      pairs.clear();
      gamma = 1.0;
    }

    const double step0 =
        pairs.empty() ? std::min(1.0, 1.0 / std::max(1e-12, dir.norm())) : 1.0;
    LineSearchResult ls = wolfe_line_search(objective, x, current, dir, step0,
                                            config.wolfe_c1, config.wolfe_c2);
    if (!ls.ok) {
      result.iterations_used = iter;
      result.termination_reason = TerminationReason::line_search_failed;
      return result;
    }

    Vector s = ls.x - x;
    Vector yv = ls.eval.gradient - current.gradient;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      pairs.emplace_back(std::move(s), yv);
      if (static_cast<int>(pairs.size()) > config.memory_pairs) {
        pairs.pop_front();
      }
      gamma = sy / yv.squaredNorm();
    }

    x = ls.x;
    current = std::move(ls.eval);
    if (current.value < result.best_value) {
      result.best_value = current.value;
      result.best_point = x;
    }
    result.iterations_used = iter + 1;
  }

  result.termination_reason = TerminationReason::max_iterations;
  return result;
}

double check_gradient(const ObjectiveFn& objective, const Vector& point,
                      double step) {
  Vector analytic(point.size());
  objective(point, analytic);
  Vector scratch(point.size());
  double worst = 0.0;
  for (Index i = 0; i < point.size(); ++i) {
    Vector p = point;
    p(i) = point(i) + step;
    const double f_plus = objective(p, scratch);
    p(i) = point(i) - step;
    const double f_minus = objective(p, scratch);
    const double fd = (f_plus - f_minus) / (2.0 * step);
    const double rel =
        std::abs(analytic(i) - fd) / std::max(std::abs(fd), 1e-8);
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace streamgp
