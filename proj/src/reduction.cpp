#include "spred/reduction.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

namespace spred {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - since)
      .count();
}

void check_orthonormal(const Matrix& Q, const char* name) {
  if (Q.cols() == 0) return;
  const Matrix G = Q.transpose() * Q;
  const double dev =
      (G - Matrix::Identity(Q.cols(), Q.cols())).cwiseAbs().maxCoeff();
  if (!(dev <= 1e-8))
    throw PreconditionError(std::string(name) +
                            " does not have orthonormal columns");
}

Weights effective_weights(ObjectiveKind kind, Weights w) {
  if (kind == ObjectiveKind::original) w.gamma = 0.0;
  if (kind == ObjectiveKind::data_only) w.alpha = 0.0;
  return w;
}

void check_p(double p) {
  if (!(p >= 1.0)) throw DomainError("norm order p must be >= 1");
}

// Entrywise derivative of pnorm_p.
Matrix pnorm_derivative(const Matrix& r, double p) {
  if (p == 2.0) return 2.0 * r;
  Matrix d = Matrix::Zero(r.rows(), r.cols());
  if (std::isinf(p)) {
    Index i = 0, j = 0;
    r.cwiseAbs().maxCoeff(&i, &j);
    d(i, j) = r(i, j) > 0.0 ? 1.0 : (r(i, j) < 0.0 ? -1.0 : 0.0);
    return d;
  }
  for (Index c = 0; c < r.cols(); ++c)
    for (Index i = 0; i < r.rows(); ++i) {
      const double v = r(i, c);
      const double s = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      d(i, c) = p == 1.0 ? s : p * std::pow(std::abs(v), p - 1.0) * s;
    }
  return d;
}

double regularizer(const Vector& theta_r, const ObjectiveContext& ctx) {
  if (ctx.prior_gram.size() > 0) return theta_r.dot(ctx.prior_gram * theta_r);
  return prior_seminorm(ctx.reduced->lift(theta_r), *ctx.prior);
}

double spectral_abscissa(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success) return kInf;
  return es.eigenvalues().real().maxCoeff();
}

bool admissible(const Matrix& A, const ObjectiveContext& ctx) {
  return ctx.growth_limit == kInf || spectral_abscissa(A) < ctx.growth_limit;
}

double evaluate(const Vector& theta_r, const Vector* theta_full,
                const ObjectiveContext& ctx) {
  ctx.validate();
  const Weights w = effective_weights(ctx.kind, ctx.weights);
  const StateSpace rs = ctx.reduced->realize(theta_r);
  if (!admissible(rs.A, ctx)) return -kInf;
  Matrix Yr;
  if (!simulate_outputs(rs, *ctx.input, ctx.dt, Yr)) return -kInf;

  double J = 0.0;
  if (w.beta != 0.0) J -= w.beta * regularizer(theta_r, ctx);
  if (w.alpha != 0.0) {
    const Vector lifted =
        theta_full ? *theta_full : ctx.reduced->lift(theta_r);
    Matrix Y;
    const StateSpace fs = realize(*ctx.full, lifted);
    if (!admissible(fs.A, ctx)) return -kInf;
    if (ctx.full_sims) ++*ctx.full_sims;
    if (!simulate_outputs(fs, *ctx.input, ctx.dt, Y)) return -kInf;
    J += w.alpha * pnorm_p(Yr - Y, ctx.p);
  }
  if (w.gamma != 0.0) J -= w.gamma * pnorm_p(Yr - *ctx.data, ctx.p);
  return std::isfinite(J) ? J : -kInf;
}

}  // namespace

ReducedSystem::ReducedSystem(const ControlSystem& system, Matrix V, Matrix P)
    : V_(std::move(V)), P_(std::move(P)) {
  if (V_.rows() != system.N())
    throw ShapeError("state basis has " + std::to_string(V_.rows()) +
                     " rows, system has N = " + std::to_string(system.N()));
  if (P_.rows() != system.P())
    throw ShapeError("parameter basis has " + std::to_string(P_.rows()) +
                     " rows, system has P = " + std::to_string(system.P()));
  if (V_.cols() < 1) throw ShapeError("state basis is empty");
  check_orthonormal(V_, "V");
  check_orthonormal(P_, "P");

  const auto& param = system.parametrization;
  A0_ = param.has_offset() ? galerkin(param.offset())
                           : Matrix::Zero(V_.cols(), V_.cols());
  Aj_.reserve(static_cast<std::size_t>(P_.cols()));
  for (Index j = 0; j < P_.cols(); ++j)
    Aj_.push_back(galerkin(param.linear_map(P_.col(j))));
  B_ = V_.transpose() * system.B;
  C_ = system.C * V_;
  D_ = system.D;
  F_ = V_.transpose() * system.F;
  x0_ = V_.transpose() * system.x0;
}

Matrix ReducedSystem::galerkin(const Matrix& A) const {
  return V_.transpose() * (A * V_);
}

Matrix ReducedSystem::assemble(const Vector& theta_r) const {
  if (theta_r.size() != k())
    throw ShapeError("reduced parameter has length " +
                     std::to_string(theta_r.size()) + ", expected " +
                     std::to_string(k()));
  Matrix A = A0_;
  for (Index j = 0; j < k(); ++j)
    if (theta_r[j] != 0.0) A += theta_r[j] * Aj_[static_cast<std::size_t>(j)];
  return A;
}

StateSpace ReducedSystem::realize(const Vector& theta_r) const {
  return {assemble(theta_r), B_, C_, D_, F_, x0_};
}

StateSpace ReducedSystem::realize_full(const Matrix& A) const {
  return {galerkin(A), B_, C_, D_, F_, x0_};
}

Vector ReducedSystem::lift(const Vector& theta_r) const {
  if (theta_r.size() != k()) throw ShapeError("lift: wrong reduced length");
  return P_ * theta_r;
}

Vector ReducedSystem::restrict(const Vector& theta) const {
  if (theta.size() != P_.rows()) throw ShapeError("restrict: wrong length");
  return P_.transpose() * theta;
}

ReducedSystem project_system(const ControlSystem& system, const Matrix& V,
                             const Matrix& P) {
  return ReducedSystem(system, V, P);
}

std::string to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::original: return "original";
    case ObjectiveKind::data_driven: return "data_driven";
    case ObjectiveKind::data_only: return "data_only";
  }
  return "?";
}

std::string to_string(Selection s) {
  switch (s) {
    case Selection::mean: return "mean";
    case Selection::pod: return "pod";
    case Selection::pod_greedy: return "pod_greedy";
  }
  return "?";
}

ObjectiveKind parse_objective(const std::string& s) {
  if (s == "original") return ObjectiveKind::original;
  if (s == "data_driven") return ObjectiveKind::data_driven;
  if (s == "data_only") return ObjectiveKind::data_only;
  throw ConfigError("unknown objective '" + s + "'");
}

Selection parse_selection(const std::string& s) {
  if (s == "mean") return Selection::mean;
  if (s == "pod") return Selection::pod;
  if (s == "pod_greedy") return Selection::pod_greedy;
  throw ConfigError("unknown selection '" + s + "'");
}

Weights default_weights(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::original: return {0.5, 0.5, 0.0};
    case ObjectiveKind::data_driven: return {1.0 / 3, 1.0 / 3, 1.0 / 3};
    case ObjectiveKind::data_only: return {0.0, 0.5, 0.5};
  }
  return {};
}

double pnorm_p(const Matrix& r, double p) {
  check_p(p);
  if (std::isinf(p)) return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  if (p == 2.0) return r.squaredNorm();
  if (p == 1.0) return r.cwiseAbs().sum();
  return r.cwiseAbs().array().pow(p).sum();
}

void ObjectiveContext::validate() const {
  if (!reduced || !prior || !input)
    throw ConfigError("objective context is missing the reduced system, "
                      "prior or input");
  check_p(p);
  const Weights w = effective_weights(kind, weights);
  if (w.alpha != 0.0 && !full)
    throw ConfigError("alpha > 0 needs the full system");
  if (w.gamma != 0.0) {
    if (!data) throw ConfigError("data misfit term needs data");
    if (data->rows() != input->rows() || data->cols() != reduced->C().rows())
      throw ShapeError("data shape does not match grid and outputs");
  }
}

double objective(const Vector& theta, const ObjectiveContext& ctx) {
  if (!ctx.reduced) throw ConfigError("objective context has no reduced system");
  return evaluate(ctx.reduced->restrict(theta), &theta, ctx);
}

double objective_reduced(const Vector& theta_r, const ObjectiveContext& ctx) {
  if (!ctx.reduced) throw ConfigError("objective context has no reduced system");
  if (theta_r.size() != ctx.reduced->k())
    throw ShapeError("reduced parameter has wrong length");
  return evaluate(theta_r, nullptr, ctx);
}

Vector snapshot_mean(const Matrix& X, double dt, double horizon) {
  const Index K = X.cols() - 1;
  if (K < 0) throw ShapeError("empty trajectory");
  if (K == 0) return X.col(0);
  return (dt / horizon) * X.rightCols(K).rowwise().sum();
}

std::vector<Vector> snapshot_pod(const Matrix& X, Index rank) {
  if (rank < 1) throw DomainError("POD rank must be >= 1");
  std::vector<Vector> modes;
  if (X.size() == 0) return modes;
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || !(s[0] > 0.0)) return modes;
  const Index count = std::min<Index>(rank, s.size());
  for (Index i = 0; i < count; ++i) {
    if (!(s[i] > 1e-12 * s[0])) break;
    Vector u = svd.matrixU().col(i);
    Index at = 0;
    u.cwiseAbs().maxCoeff(&at);
    if (u[at] < 0.0) u = -u;
    modes.push_back(std::move(u));
  }
  return modes;
}

std::vector<Vector> snapshot_pod_greedy(const Matrix& X, const Matrix& V,
                                        Index rank) {
  if (V.cols() == 0) return snapshot_pod(X, rank);
  if (V.rows() != X.rows()) throw ShapeError("basis and snapshots differ in N");
  const Matrix E = X - V * (V.transpose() * X);
  const double floor =
      1e-12 * std::max(1.0, X.colwise().norm().maxCoeff());
  if (E.colwise().norm().maxCoeff() < floor) return {};
  return snapshot_pod(E, rank);
}

namespace {

double traj_dt(const Trajectory& t) {
  return t.times.size() > 1 ? t.times[1] - t.times[0] : 1.0;
}

double traj_horizon(const Trajectory& t) {
  return t.times.size() > 1 ? t.times[t.times.size() - 1] - t.times[0] : 1.0;
}

}  // namespace

std::vector<Vector> select_mean(const Trajectory& traj) {
  if (traj.states.rows() == 0) throw ShapeError("empty trajectory");
  return {snapshot_mean(traj.states.transpose(), traj_dt(traj),
                        traj_horizon(traj))};
}

std::vector<Vector> select_pod(const Trajectory& traj, Index rank) {
  return snapshot_pod(traj.states.transpose(), rank);
}

std::vector<Vector> select_pod_greedy(const Trajectory& traj, const Matrix& V,
                                      Index rank) {
  return snapshot_pod_greedy(traj.states.transpose(), V, rank);
}

InsertResult orthogonalize_insert(const Matrix& basis,
                                  const std::vector<Vector>& candidates,
                                  double tol) {
  InsertResult out;
  out.basis = basis;
  for (const auto& c : candidates) {
    if (out.basis.cols() == 0 && out.basis.rows() != c.size())
      out.basis.resize(c.size(), 0);
    if (c.size() != out.basis.rows())
      throw ShapeError("candidate length does not match basis rows");
    const double cn = c.norm();
    if (!(cn > 0.0) || !std::isfinite(cn)) {
      ++out.discarded;
      continue;
    }
    Vector r = c;
    for (int pass = 0; pass < 2; ++pass)
      if (out.basis.cols() > 0)
        r.noalias() -= out.basis * (out.basis.transpose() * r);
    const double rn = r.norm();
    if (rn <= tol * cn) {
      ++out.discarded;
      continue;
    }
    out.basis.conservativeResize(Eigen::NoChange, out.basis.cols() + 1);
    out.basis.col(out.basis.cols() - 1) = r / rn;
    ++out.inserted;
  }
  return out;
}

std::optional<Vector> completion_candidate(const Matrix& basis, double tol) {
  const Index n = basis.rows();
  if (n == 0 || basis.cols() >= n) return std::nullopt;
  Vector residual = Vector::Ones(n);
  if (basis.cols() > 0) residual -= basis.rowwise().squaredNorm();
  Index best = 0;
  const double top = residual.maxCoeff(&best);
  if (!(std::sqrt(std::max(top, 0.0)) > tol)) return std::nullopt;
  return Vector::Unit(n, best);
}

Vector trust_lift(const Vector& theta_tr, const Matrix& P) {
  if (theta_tr.size() > P.cols())
    throw ShapeError("trust coordinate has " +
                     std::to_string(theta_tr.size()) + " entries, P has " +
                     std::to_string(P.cols()) + " columns");
  return P.leftCols(theta_tr.size()) * theta_tr;
}

Weights ReductionConfig::resolved_weights() const {
  return effective_weights(objective,
                           weights ? *weights : default_weights(objective));
}

void ReductionConfig::validate(bool have_data) const {
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (pod_rank < 1) throw ConfigError("pod_rank must be >= 1");
  if (!(p >= 1.0)) throw ConfigError("norm order p must be >= 1");
  if (weights) {
    for (double v : {weights->alpha, weights->beta, weights->gamma})
      if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError("weights must lie in [0, 1]");
    if (objective == ObjectiveKind::original && weights->gamma > 0.0)
      throw ConfigError("the original objective does not use data (gamma > 0)");
  }
  if (objective != ObjectiveKind::original && resolved_weights().gamma > 0.0 &&
      !have_data)
    throw ConfigError("objective " + to_string(objective) + " needs data");
  if (!(discard_tol > 0.0)) throw ConfigError("discard_tol must be > 0");
  optimizer.validate();
}

std::size_t ReductionTrace::total_full_sims() const {
  std::size_t n = 0;
  for (const auto& r : iterations) n += r.full_sims;
  return n;
}

double ReductionTrace::total_ms() const {
  double t = init_ms;
  for (const auto& r : iterations) t += r.wall_ms;
  return t;
}

Vector expansion_direction(const Vector& theta, const ObjectiveContext& ctx, const Matrix& X_full,
                           const Matrix& Y_full) {
  ctx.validate();
  const Weights w = effective_weights(ctx.kind, ctx.weights);
  const ControlSystem* full = ctx.full;
  if (!full) throw ConfigError("expansion direction needs the full system");
  const ReducedSystem& red = *ctx.reduced;
  const Matrix A = full->parametrization.map(theta);
  Matrix GA = Matrix::Zero(A.rows(), A.cols());

  if (w.gamma != 0.0) {
    const Matrix E = -w.gamma * pnorm_derivative(Y_full - *ctx.data, ctx.p);
    GA += adjoint_gradient(A, full->C, X_full, E, ctx.dt);
  }
  if (w.alpha != 0.0) {
    const StateSpace ss = red.realize_full(A);
    Matrix Xr;
    if (integrate(ss, *ctx.input, ctx.dt, Xr) < 0) {
      const Matrix Yr = outputs_from_states(ss, Xr, *ctx.input);
      const Matrix E = w.alpha * pnorm_derivative(Yr - Y_full, ctx.p);
      GA += red.V() * adjoint_gradient(ss.A, ss.C, Xr, E, ctx.dt) *
            red.V().transpose();
      GA -= adjoint_gradient(A, full->C, X_full, E, ctx.dt);
    }
  }
  Vector g = full->parametrization.adjoint(GA);
  if (w.beta != 0.0) g -= 2.0 * w.beta * ctx.prior->apply_precision(theta);
  return g;
}

namespace {

std::vector<Vector> select_states(const Matrix& X, const Matrix& V,
                                  const ReductionConfig& config,
                                  const TimeGrid& grid) {
  switch (config.selection) {
    case Selection::mean:
      return {snapshot_mean(X, grid.dt, grid.horizon())};
    case Selection::pod:
      return snapshot_pod(X, config.pod_rank);
    case Selection::pod_greedy:
      return snapshot_pod_greedy(X, V, config.pod_rank);
  }
  return {};
}

InsertResult grow(const Matrix& basis, const std::vector<Vector>& candidates,
                  const ReductionConfig& config) {
  InsertResult res = orthogonalize_insert(basis, candidates, config.discard_tol);
  if (res.inserted == 0 && config.complete_bases) {
    if (auto e = completion_candidate(res.basis, config.discard_tol)) {
      const InsertResult extra =
          orthogonalize_insert(res.basis, {*e}, config.discard_tol);
      res.basis = extra.basis;
      res.inserted += extra.inserted;
    }
  }
  return res;
}

}  // namespace

ReductionResult combined_reduce(const ControlSystem& system,
                                const GaussianPrior& prior,
                                const TimeGrid& grid, const Matrix& input,
                                const ReductionConfig& config,
                                const Matrix* data) {
  const auto start = std::chrono::steady_clock::now();
  config.validate(data != nullptr);
  grid.validate();
  const Index K = grid.steps();
  if (input.rows() != K + 1 || input.cols() != system.J())
    throw ShapeError("input does not match grid and system inputs");
  if (data && (data->rows() != K + 1 || data->cols() != system.O()))
    throw ShapeError("data does not match grid and system outputs");
  if (prior.dim() != system.P())
    throw ShapeError("prior dimension does not match the parametrization");
  const double mean_norm = prior.mean().norm();
  if (!(mean_norm > 0.0))
    throw PreconditionError("prior mean must be nonzero");

  const Weights w = config.resolved_weights();
  ReductionResult result;
  ReductionTrace& trace = result.trace;
  Matrix P = prior.mean() / mean_norm;

  Matrix X;
  const StateSpace ss0 = realize(system, prior.mean());
  if (integrate(ss0, input, grid.dt, X) >= 0)
    throw InstabilityError(0, "prior-mean system is unstable on this grid");
  trace.init_sims = 1;
  // Only meaningful when the prior-mean system is itself Hurwitz.
  const double growth_limit =
      config.stable_only && spectral_abscissa(ss0.A) < 0.0 ? 0.0 : kInf;
  Matrix V =
      grow(Matrix(system.N(), 0), select_states(X, Matrix(system.N(), 0),
                                                config, grid),
           config)
          .basis;
  if (V.cols() == 0)
    throw PreconditionError(
        "trajectory at the prior mean is zero; no initial state basis");
  trace.init_ms = elapsed_ms(start);

  Vector theta_cur = prior.mean();
  Vector theta_tr = Vector::Ones(1);
  std::size_t sims = 0;

  for (Index I = 1; I <= config.iterations; ++I) {
    const auto iter_start = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.iter = I;
    sims = 0;

    const ReducedSystem reduced(system, V, P);
    ObjectiveContext ctx;
    ctx.full = &system;
    ctx.reduced = &reduced;
    ctx.prior = &prior;
    ctx.input = &input;
    ctx.data = data;
    ctx.dt = grid.dt;
    ctx.kind = config.objective;
    ctx.weights = w;
    ctx.p = config.p;
    ctx.full_sims = &sims;
    ctx.growth_limit = growth_limit;
    if (w.beta != 0.0)
      ctx.prior_gram = P.transpose() * prior.apply_precision(P);

    const Index k = P.cols();
    Objective f;
    Vector x0;
    if (config.trust_region) {
      const Index d = std::min(I, k);
      x0 = Vector::Zero(d);
      const Index keep = std::min<Index>(d, theta_tr.size());
      x0.head(keep) = theta_tr.head(keep);
      f = [&ctx, k, d](const Vector& v) {
        Vector tr = Vector::Zero(k);
        tr.head(d) = v;
        return -objective_reduced(tr, ctx);
      };
    } else {
      x0 = theta_cur;
      f = [&ctx](const Vector& v) { return -objective(v, ctx); };
    }
    rec.search_dim = x0.size();
    // Fall back to the prior mean when the previous maximizer is not
    // admissible under the new bases.
    if (!std::isfinite(f(x0))) {
      if (config.trust_region)
        x0 = reduced.restrict(prior.mean()).head(x0.size());
      else
        x0 = prior.mean();
    }

    OptimizeOptions opts = config.optimizer;
    opts.max_evals = std::max(opts.max_evals, config.evals_per_dim * x0.size());
    OptimizeResult res;
    try {
      res = minimize(f, x0, opts);
    } catch (const MemoryBudgetError&) {
      throw;
    } catch (const Error& e) {
      rec.optimizer_failed = true;
      rec.note = e.what();
      res.x_best = x0;
      res.f_best = f(x0);
    }
    rec.objective = -res.f_best;
    rec.evals = res.evals;
    rec.reason = res.reason;

    Vector theta_r;
    Vector theta_I;
    if (config.trust_region) {
      theta_tr = res.x_best;
      theta_r = Vector::Zero(k);
      theta_r.head(theta_tr.size()) = theta_tr;
      theta_I = reduced.lift(theta_r);
    } else {
      theta_cur = res.x_best;
      theta_I = theta_cur;
      theta_r = reduced.restrict(theta_I);
    }
    rec.theta = theta_I;

    const StateSpace ss = realize(system, theta_I);
    ++rec.support_sims;
    const bool stable = integrate(ss, input, grid.dt, X) < 0;

    std::vector<Vector> p_candidates;
    if (!config.trust_region) {
      p_candidates.push_back(theta_I);
    } else if (stable) {
      const Matrix Y = outputs_from_states(ss, X, input);
      p_candidates.push_back(expansion_direction(theta_I, ctx, X, Y));
    }
    const InsertResult pins = grow(P, p_candidates, config);
    P = pins.basis;
    rec.discarded_P = pins.discarded;

    if (stable) {
      const InsertResult vins = grow(V, select_states(X, V, config, grid), config);
      V = vins.basis;
      rec.discarded_V = vins.discarded;
    } else {
      const InsertResult vins = grow(V, {}, config);
      V = vins.basis;
      if (!rec.note.empty()) rec.note += "; ";
      rec.note += "full system unstable at the lifted maximizer";
    }

    rec.dim_P = P.cols();
    rec.dim_V = V.cols();
    rec.full_sims = sims;
    rec.wall_ms = elapsed_ms(iter_start);
    trace.iterations.push_back(std::move(rec));
  }

  result.pair = {std::move(V), std::move(P)};
  return result;
}

}  // namespace spred
