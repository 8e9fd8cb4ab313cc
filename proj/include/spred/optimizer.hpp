#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "spred/common.hpp"

namespace spred {

enum class Method { automatic, simplex, quasi_newton_fd };

enum class StopReason {
  f_tol,
  x_tol,
  gradient,
  max_evals,
  line_search,
  gradient_failed,
};

std::string to_string(Method m);
std::string to_string(StopReason r);

// Budget from SPRED_MEMORY_BUDGET_MB, 64 MiB when unset.
std::size_t default_memory_budget();

struct OptimizeOptions {
  Index max_evals = 2000;
  double x_tol = 1e-8;
  double f_tol = 1e-10;
  double g_tol = 1e-8;
  Method method = Method::automatic;
  double fd_step = 1e-6;
  // Simplex edge length relative to max(1, |x_i|).
  double initial_step = 0.1;
  int restarts = 1;
  Index simplex_max_dim = 40;
  std::size_t memory_budget = default_memory_budget();

  void validate() const;
};

struct OptimizeResult {
  Vector x_best;
  double f_best = 0.0;
  Index evals = 0;
  bool converged = false;
  StopReason reason = StopReason::max_evals;
  Method method = Method::simplex;
};

using Objective = std::function<double(const Vector&)>;

Method resolve_method(Index dim, const OptimizeOptions& opts);
// Bytes of the dense d x d working matrix either method keeps.
std::size_t estimate_memory(Index dim);

// Minimizes f from x0. Non-finite values count as +inf. Throws
// MemoryBudgetError before evaluating anything when the estimate exceeds the
// budget, DomainError when f(x0) is not finite.
OptimizeResult minimize(const Objective& f, const Vector& x0,
                        const OptimizeOptions& opts);

// Central differences with absolute step.
Vector fd_gradient(const Objective& f, const Vector& x, double step);

}  // namespace spred
