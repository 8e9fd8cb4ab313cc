#pragma once

#include <string>

#include "spred/common.hpp"
#include "spred/lti.hpp"
#include "spred/optimizer.hpp"
#include "spred/prior.hpp"
#include "spred/reduction.hpp"

namespace spred {

struct DataSet {
  TimeGrid grid;
  Matrix input;    // (K+1) x J
  Matrix outputs;  // (K+1) x O
  double noise_variance = 0.0;

  void validate() const;
};

struct InversionResult {
  Vector theta_map;      // full parameter space
  Vector theta_reduced;  // empty for full-order inversions
  double objective_value = 0.0;
  double online_time_s = 0.0;
  // Against the data the inversion was fitted to.
  double relative_output_error = 0.0;
  Index evals = 0;
  StopReason reason = StopReason::max_evals;
  Matrix fitted_outputs;
};

// min ||y(theta) - y_d||^2 + ||theta - kappa||^2_{K^-1}, started at kappa.
// Throws MemoryBudgetError when the optimizer refuses to start.
InversionResult map_full(const ControlSystem& system,
                         const GaussianPrior& prior, const DataSet& data,
                         const OptimizeOptions& opts);

// min ||y_r(theta_r) - y_d||^2 + ||P theta_r - kappa||^2_{K^-1}, started at
// P^T kappa; theta_map = P theta_r.
InversionResult map_reduced(const ReducedSystem& reduced,
                            const GaussianPrior& prior, const DataSet& data,
                            const OptimizeOptions& opts);

Vector reconstruct(const Vector& theta_r, const Matrix& P);

struct ReducedPrior {
  Vector mean;                  // P^T kappa
  Matrix parameter_covariance;  // P^T K P
  Matrix state_covariance;      // V^T S V
};

ReducedPrior reduce_prior(const GaussianPrior& prior, const Matrix& P,
                          const Matrix& V, const Matrix& state_covariance);

double relative_output_error(const Matrix& y_model, const Matrix& y_ref);

std::string inversion_json(const InversionResult& result);
void write_inversion_json(const std::string& path,
                          const InversionResult& result);

}  // namespace spred
