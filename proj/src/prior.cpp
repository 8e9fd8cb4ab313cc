#include "spred/prior.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace spred {

GaussianPrior::GaussianPrior(Vector mean, const Matrix& covariance)
    : mean_(std::move(mean)) {
  if (covariance.rows() != mean_.size() || covariance.cols() != mean_.size())
    throw ShapeError("prior covariance must be P x P");
  const double tol = 1e-12 * std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > tol)
    throw DomainError("prior covariance must be symmetric");

  Matrix off = covariance;
  off.diagonal().setZero();
  diagonal_ = off.isZero(0.0);
  if (diagonal_) {
    variances_ = covariance.diagonal();
    if ((variances_.array() < 0.0).any())
      throw DomainError("prior variances must be >= 0");
    singular_ = (variances_.array() == 0.0).any();
    return;
  }
  dense_ = covariance;
  ldlt_.compute(dense_);
  const Vector D = ldlt_.vectorD();
  const double top = D.cwiseAbs().maxCoeff();
  singular_ = ldlt_.info() != Eigen::Success || !(top > 0.0) ||
              D.cwiseAbs().minCoeff() <= 1e-14 * top;
}

GaussianPrior GaussianPrior::diagonal(Vector mean, Vector variances) {
  if (variances.size() != mean.size())
    throw ShapeError("prior variances must have length P");
  if ((variances.array() < 0.0).any())
    throw DomainError("prior variances must be >= 0");
  GaussianPrior prior;
  prior.mean_ = std::move(mean);
  prior.variances_ = std::move(variances);
  prior.diagonal_ = true;
  prior.singular_ = (prior.variances_.array() == 0.0).any();
  return prior;
}

Matrix GaussianPrior::covariance() const {
  if (diagonal_) return variances_.asDiagonal();
  return dense_;
}

void GaussianPrior::require_invertible() const {
  if (singular_) throw SolveError("prior covariance is singular");
}

Matrix GaussianPrior::apply_precision(const Matrix& x) const {
  if (x.rows() != dim()) throw ShapeError("precision: wrong row count");
  require_invertible();
  if (diagonal_) return variances_.cwiseInverse().asDiagonal() * x;
  return ldlt_.solve(x);
}

Vector GaussianPrior::apply_precision(const Vector& x) const {
  if (x.size() != dim()) throw ShapeError("precision: wrong length");
  require_invertible();
  if (diagonal_) return x.cwiseQuotient(variances_);
  return ldlt_.solve(x);
}

double prior_seminorm(const Vector& theta, const GaussianPrior& prior) {
  if (theta.size() != prior.dim())
    throw ShapeError("prior_seminorm: parameter length " +
                     std::to_string(theta.size()) + ", prior has " +
                     std::to_string(prior.dim()));
  return theta.dot(prior.apply_precision(theta));
}

}  // namespace spred
