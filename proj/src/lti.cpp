#include "spred/lti.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <utility>

#include "spred/rng.hpp"

namespace spred {

TimeGrid::TimeGrid(double start, double step, double end)
    : t_start(start), dt(step), t_end(end) {
  validate();
}

void TimeGrid::validate() const {
  if (!std::isfinite(t_start) || !std::isfinite(dt) || !std::isfinite(t_end))
    throw DomainError("time grid values must be finite");
  if (dt <= 0.0) throw DomainError("time grid needs dt > 0");
  if (t_end <= t_start) throw DomainError("time grid needs t_end > t_start");
  if (steps() < 1) throw DomainError("time grid has no steps");
}

Index TimeGrid::steps() const {
  return static_cast<Index>(std::llround((t_end - t_start) / dt));
}

Matrix vec_inverse(const Vector& theta, Index N) {
  if (N < 0 || theta.size() != N * N)
    throw ShapeError("vec_inverse: length " + std::to_string(theta.size()) +
                     " is not N^2 for N = " + std::to_string(N));
  Matrix A(N, N);
  for (Index r = 0; r < N; ++r)
    for (Index c = 0; c < N; ++c) A(r, c) = theta[r * N + c];
  return A;
}

Vector flatten(const Matrix& A) {
  Vector theta(A.size());
  for (Index r = 0; r < A.rows(); ++r)
    for (Index c = 0; c < A.cols(); ++c) theta[r * A.cols() + c] = A(r, c);
  return theta;
}

Parametrization::Parametrization(Index state_dim, Index param_dim,
                                 Matrix offset, std::vector<Entry> entries,
                                 std::string tag)
    : state_dim_(state_dim),
      param_dim_(param_dim),
      offset_(std::move(offset)),
      entries_(std::move(entries)),
      tag_(std::move(tag)) {
  if (state_dim_ < 1 || param_dim_ < 0)
    throw ShapeError("parametrization dimensions must be positive");
  if (offset_.size() == 0) offset_ = Matrix::Zero(state_dim_, state_dim_);
  if (offset_.rows() != state_dim_ || offset_.cols() != state_dim_)
    throw ShapeError("parametrization offset must be N x N");
  for (const auto& e : entries_) {
    if (e.param < 0 || e.param >= param_dim_ || e.row < 0 ||
        e.row >= state_dim_ || e.col < 0 || e.col >= state_dim_)
      throw ShapeError("parametrization entry out of range");
  }
  has_offset_ = !offset_.isZero(0.0);
}

Parametrization Parametrization::full(Index N) {
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(N * N));
  for (Index i = 0; i < N * N; ++i) entries.push_back({i, i / N, i % N, 1.0});
  return Parametrization(N, N * N, Matrix(), std::move(entries), "full");
}

Matrix Parametrization::linear_map(const Vector& theta) const {
  if (theta.size() != param_dim_)
    throw ShapeError("parameter vector has length " +
                     std::to_string(theta.size()) + ", expected " +
                     std::to_string(param_dim_));
  Matrix A = Matrix::Zero(state_dim_, state_dim_);
  for (const auto& e : entries_) A(e.row, e.col) += e.coef * theta[e.param];
  return A;
}

Matrix Parametrization::map(const Vector& theta) const {
  Matrix A = linear_map(theta);
  if (has_offset_) A += offset_;
  return A;
}

Vector Parametrization::adjoint(const Matrix& G) const {
  if (G.rows() != state_dim_ || G.cols() != state_dim_)
    throw ShapeError("adjoint: gradient must be N x N");
  Vector g = Vector::Zero(param_dim_);
  for (const auto& e : entries_) g[e.param] += e.coef * G(e.row, e.col);
  return g;
}

ControlSystem::ControlSystem(Parametrization param, Matrix B_, Matrix C_,
                             Matrix D_, Vector F_, Vector x0_)
    : parametrization(std::move(param)),
      B(std::move(B_)),
      C(std::move(C_)),
      D(std::move(D_)),
      F(std::move(F_)),
      x0(std::move(x0_)) {
  if (D.size() == 0) D = Matrix::Zero(C.rows(), B.cols());
  if (F.size() == 0) F = Vector::Zero(N());
  if (x0.size() == 0) x0 = Vector::Zero(N());
  validate();
}

void ControlSystem::validate() const {
  const Index n = N();
  if (B.rows() != n) throw ShapeError("B must have N rows");
  if (C.cols() != n) throw ShapeError("C must have N columns");
  if (D.rows() != C.rows() || D.cols() != B.cols())
    throw ShapeError("D must be O x J");
  if (F.size() != n) throw ShapeError("F must have length N");
  if (x0.size() != n) throw ShapeError("x0 must have length N");
}

StateSpace realize(const ControlSystem& system, const Vector& theta) {
  return {system.parametrization.map(theta), system.B, system.C, system.D,
          system.F, system.x0};
}

namespace {

void check_input(const StateSpace& ss, const Matrix& input) {
  if (input.cols() != ss.B.cols())
    throw ShapeError("input has " + std::to_string(input.cols()) +
                     " channels, system expects " +
                     std::to_string(ss.B.cols()));
  if (input.rows() < 2) throw ShapeError("input needs at least two rows");
}

// dt * (B u_k + F) for every node, as columns.
Matrix forcing(const StateSpace& ss, const Matrix& input, double dt) {
  Matrix Fk = ss.B * input.transpose();
  Fk.colwise() += ss.F;
  Fk *= dt;
  return Fk;
}

}  // namespace

Index integrate(const StateSpace& ss, const Matrix& input, double dt,
                Matrix& X) {
  check_input(ss, input);
  const Index n = ss.A.rows();
  const Index K = input.rows() - 1;
  const Matrix M = Matrix::Identity(n, n) + dt * ss.A;
  const Matrix Fk = forcing(ss, input, dt);
  X.resize(n, K + 1);
  X.col(0) = ss.x0;
  if (!X.col(0).allFinite()) return 0;
  for (Index k = 0; k < K; ++k) {
    X.col(k + 1).noalias() = M * X.col(k);
    X.col(k + 1) += Fk.col(k);
    if (!X.col(k + 1).allFinite()) return k + 1;
  }
  return -1;
}

Index integrate_block(const StateSpace& ss, const Matrix& input, double dt,
                      Matrix& X) {
  check_input(ss, input);
  const Index n = ss.A.rows();
  const Index K = input.rows() - 1;
  const Index dim = n * (K + 1);
  const Matrix M = Matrix::Identity(n, n) + dt * ss.A;
  const Matrix Fk = forcing(ss, input, dt);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(dim + K * n * n));
  for (Index i = 0; i < dim; ++i) triplets.emplace_back(i, i, 1.0);
  for (Index k = 0; k < K; ++k)
    for (Index c = 0; c < n; ++c)
      for (Index r = 0; r < n; ++r)
        if (M(r, c) != 0.0)
          triplets.emplace_back((k + 1) * n + r, k * n + c, -M(r, c));
  Eigen::SparseMatrix<double> L(dim, dim);
  L.setFromTriplets(triplets.begin(), triplets.end());

  Vector rhs(dim);
  rhs.head(n) = ss.x0;
  for (Index k = 0; k < K; ++k) rhs.segment((k + 1) * n, n) = Fk.col(k);
  const Vector sol = L.triangularView<Eigen::Lower>().solve(rhs);

  X = Eigen::Map<const Matrix>(sol.data(), n, K + 1);
  for (Index k = 0; k <= K; ++k)
    if (!X.col(k).allFinite()) return k;
  return -1;
}

Matrix outputs_from_states(const StateSpace& ss, const Matrix& X,
                           const Matrix& input) {
  Matrix Y = X.transpose() * ss.C.transpose();
  if (!ss.D.isZero(0.0)) Y.noalias() += input * ss.D.transpose();
  return Y;
}

bool simulate_outputs(const StateSpace& ss, const Matrix& input, double dt,
                      Matrix& Y, Matrix* X) {
  Matrix local;
  Matrix& states = X ? *X : local;
  if (integrate(ss, input, dt, states) >= 0) return false;
  Y = outputs_from_states(ss, states, input);
  return Y.allFinite();
}

Trajectory simulate(const StateSpace& ss, const Matrix& input,
                    const TimeGrid& grid, SimMethod method) {
  grid.validate();
  const Index K = grid.steps();
  if (input.rows() != K + 1)
    throw ShapeError("input has " + std::to_string(input.rows()) +
                     " rows, grid has " + std::to_string(K + 1) + " nodes");
  Matrix X;
  const Index bad = method == SimMethod::step
                        ? integrate(ss, input, grid.dt, X)
                        : integrate_block(ss, input, grid.dt, X);
  if (bad >= 0)
    throw InstabilityError(bad, "non-finite state at step " +
                                    std::to_string(bad) + " (t = " +
                                    std::to_string(grid.time(bad)) + ")");
  Trajectory traj;
  traj.times.resize(K + 1);
  for (Index k = 0; k <= K; ++k) traj.times[k] = grid.time(k);
  traj.outputs = outputs_from_states(ss, X, input);
  traj.states = X.transpose();
  return traj;
}

Trajectory simulate(const ControlSystem& system, const Vector& theta,
                    const Matrix& input, const TimeGrid& grid,
                    SimMethod method) {
  return simulate(realize(system, theta), input, grid, method);
}

Matrix adjoint_gradient(const Matrix& A, const Matrix& C, const Matrix& X,
                        const Matrix& E, double dt) {
  const Index n = A.rows();
  const Index K = X.cols() - 1;
  if (E.rows() != K + 1 || E.cols() != C.rows())
    throw ShapeError("adjoint_gradient: output weights have wrong shape");
  const Matrix Mt = (Matrix::Identity(n, n) + dt * A).transpose();
  const Matrix CtE = C.transpose() * E.transpose();  // n x (K+1)
  // Lambda.col(k) holds lambda_{k+1}.
  Matrix Lambda(n, K);
  Vector lam = CtE.col(K);
  for (Index k = K - 1; k >= 0; --k) {
    Lambda.col(k) = lam;
    lam = CtE.col(k) + Mt * lam;
  }
  return dt * (Lambda * X.leftCols(K).transpose());
}

Matrix impulse_input(const TimeGrid& grid, Index J, double magnitude) {
  grid.validate();
  if (!std::isfinite(magnitude)) throw DomainError("impulse magnitude");
  if (J < 0) throw ShapeError("negative channel count");
  Matrix u = Matrix::Zero(grid.steps() + 1, J);
  u.row(0).setConstant(magnitude / grid.dt);
  return u;
}

Matrix add_noise(const Matrix& outputs, double variance, std::uint64_t seed) {
  if (!(variance >= 0.0)) throw DomainError("noise variance must be >= 0");
  Matrix noisy = outputs;
  if (variance == 0.0) return noisy;
  const double sd = std::sqrt(variance);
  Rng rng(seed);
  for (Index r = 0; r < noisy.rows(); ++r)
    for (Index c = 0; c < noisy.cols(); ++c) noisy(r, c) += sd * rng.normal();
  return noisy;
}

}  // namespace spred
