#pragma once

#include <Eigen/Cholesky>

#include "spred/common.hpp"

namespace spred {

// N(mean, covariance) over the parameter vector. Diagonal covariances are
// kept as a vector so P = 65536 priors never materialize a dense matrix.
class GaussianPrior {
 public:
  GaussianPrior() = default;
  GaussianPrior(Vector mean, const Matrix& covariance);
  static GaussianPrior diagonal(Vector mean, Vector variances);

  Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  bool is_diagonal() const { return diagonal_; }
  const Vector& variances() const { return variances_; }
  Matrix covariance() const;

  // K^-1 x, columnwise for matrices.
  Matrix apply_precision(const Matrix& x) const;
  Vector apply_precision(const Vector& x) const;

 private:
  void require_invertible() const;

  Vector mean_;
  bool diagonal_ = true;
  Vector variances_;
  Matrix dense_;
  Eigen::LDLT<Matrix> ldlt_;
  bool singular_ = false;
};

// theta^T K^-1 theta.
double prior_seminorm(const Vector& theta, const GaussianPrior& prior);

}  // namespace spred
