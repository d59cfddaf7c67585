#ifndef STREAMGP_OPTIMIZER_HPP
#define STREAMGP_OPTIMIZER_HPP

#include <functional>

#include "streamgp/types.hpp"

namespace streamgp {

/// Evaluates the objective at x and fills grad (resized by the callee).
/// Used for minimization; callers maximizing a bound pass its negation.
using ObjectiveFn = std::function<double(const Vector& x, Vector& grad)>;

struct OptimizerConfig {
  int max_iterations = 100;
  double gradient_tolerance = 1e-5;  // inf-norm stopping threshold
  int memory_pairs = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;

  void validate() const;
};

enum class TerminationReason { gradient_small, max_iterations, line_search_failed };

struct OptimizationResult {
  Vector best_point;
  double best_value = 0.0;
  int iterations_used = 0;
  bool converged = false;
  TerminationReason termination_reason = TerminationReason::max_iterations;
};

/// Limited-memory BFGS with a strong-Wolfe line search. Accepted iterates
/// are monotone non-increasing in value; non-finite trial points are
/// rejected by the line search and never accepted. Throws
/// std::invalid_argument if the objective is non-finite at the start.
OptimizationResult minimize(const ObjectiveFn& objective, const Vector& start,
                            const OptimizerConfig& config);

/// Central-difference check of the objective's gradient at a point.
/// Returns the worst per-coordinate relative error.
double check_gradient(const ObjectiveFn& objective, const Vector& point,
                      double step = 1e-5);

const char* to_string(TerminationReason reason);

}  // namespace streamgp

#endif  // STREAMGP_OPTIMIZER_HPP
