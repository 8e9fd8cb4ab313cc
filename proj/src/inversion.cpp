#include "spred/inversion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace spred {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_data(const DataSet& data, Index J, Index O) {
  data.validate();
  if (data.input.cols() != J)
    throw ShapeError("data input has " + std::to_string(data.input.cols()) +
                     " channels, model expects " + std::to_string(J));
  if (data.outputs.cols() != O)
    throw ShapeError("data has " + std::to_string(data.outputs.cols()) +
                     " outputs, model has " + std::to_string(O));
}

}  // namespace

void DataSet::validate() const {
  grid.validate();
  const Index rows = grid.steps() + 1;
  if (input.rows() != rows || outputs.rows() != rows)
    throw ShapeError("data rows do not match the time grid");
  if (!(noise_variance >= 0.0)) throw DomainError("negative noise variance");
}

InversionResult map_full(const ControlSystem& system,
                         const GaussianPrior& prior, const DataSet& data,
                         const OptimizeOptions& opts) {
  check_data(data, system.J(), system.O());
  if (prior.dim() != system.P())
    throw ShapeError("prior dimension does not match the parametrization");
  const auto start = std::chrono::steady_clock::now();
  const double dt = data.grid.dt;
  auto f = [&](const Vector& theta) {
    Matrix Y;
    if (!simulate_outputs(realize(system, theta), data.input, dt, Y))
      return kInf;
    return (Y - data.outputs).squaredNorm() +
           prior_seminorm(theta - prior.mean(), prior);
  };
  const OptimizeResult res = minimize(f, prior.mean(), opts);

  InversionResult out;
  out.online_time_s = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  out.theta_map = res.x_best;
  out.objective_value = res.f_best;
  out.evals = res.evals;
  out.reason = res.reason;
  simulate_outputs(realize(system, out.theta_map), data.input, dt,
                   out.fitted_outputs);
  out.relative_output_error =
      relative_output_error(out.fitted_outputs, data.outputs);
  return out;
}

InversionResult map_reduced(const ReducedSystem& reduced,
                            const GaussianPrior& prior, const DataSet& data,
                            const OptimizeOptions& opts) {
  check_data(data, reduced.B().cols(), reduced.C().rows());
  if (prior.dim() != reduced.P().rows())
    throw ShapeError("prior dimension does not match the parameter basis");
  const auto start = std::chrono::steady_clock::now();
  const double dt = data.grid.dt;

  // ||P t - kappa||^2_{K^-1} = t^T G t - 2 t^T h + c, exact for orthonormal
  // or arbitrary P alike.
  const Matrix& P = reduced.P();
  const Matrix KP = prior.apply_precision(P);
  const Matrix G = P.transpose() * KP;
  const Vector h = KP.transpose() * prior.mean();
  const double c = prior_seminorm(prior.mean(), prior);

  auto f = [&](const Vector& tr) {
    Matrix Y;
    if (!simulate_outputs(reduced.realize(tr), data.input, dt, Y)) return kInf;
    const double reg = tr.dot(G * tr) - 2.0 * tr.dot(h) + c;
    return (Y - data.outputs).squaredNorm() + std::max(reg, 0.0);
  };
  const OptimizeResult res = minimize(f, reduced.restrict(prior.mean()), opts);

  InversionResult out;
  out.online_time_s = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  out.theta_reduced = res.x_best;
  out.theta_map = reconstruct(res.x_best, P);
  out.objective_value = res.f_best;
  out.evals = res.evals;
  out.reason = res.reason;
  simulate_outputs(reduced.realize(res.x_best), data.input, dt,
                   out.fitted_outputs);
  out.relative_output_error =
      relative_output_error(out.fitted_outputs, data.outputs);
  return out;
}

Vector reconstruct(const Vector& theta_r, const Matrix& P) {
  if (theta_r.size() != P.cols())
    throw ShapeError("reconstruct: reduced length does not match P");
  return P * theta_r;
}

ReducedPrior reduce_prior(const GaussianPrior& prior, const Matrix& P,
                          const Matrix& V, const Matrix& state_covariance) {
  if (P.rows() != prior.dim()) throw ShapeError("reduce_prior: P rows");
  if (state_covariance.rows() != V.rows() ||
      state_covariance.cols() != V.rows())
    throw ShapeError("reduce_prior: state covariance must be N x N");
  ReducedPrior out;
  out.mean = P.transpose() * prior.mean();
  if (prior.is_diagonal())
    out.parameter_covariance =
        P.transpose() * prior.variances().asDiagonal() * P;
  else
    out.parameter_covariance = P.transpose() * prior.covariance() * P;
  out.state_covariance = V.transpose() * state_covariance * V;
  return out;
}

double relative_output_error(const Matrix& y_model, const Matrix& y_ref) {
  if (y_model.rows() != y_ref.rows() || y_model.cols() != y_ref.cols())
    throw ShapeError("relative_output_error: shapes differ");
  const double ref = y_ref.norm();
  if (!(ref > 0.0)) throw DomainError("relative_output_error: zero reference");
  return (y_model - y_ref).norm() / ref;
}

std::string inversion_json(const InversionResult& result) {
  nlohmann::json j;
  j["theta_map"] = std::vector<double>(
      result.theta_map.data(), result.theta_map.data() + result.theta_map.size());
  j["objective"] = result.objective_value;
  j["online_ms"] = result.online_time_s * 1e3;
  j["rel_err"] = result.relative_output_error;
  return j.dump(2);
}

void write_inversion_json(const std::string& path,
                          const InversionResult& result) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << inversion_json(result) << "\n";
}

}  // namespace spred
