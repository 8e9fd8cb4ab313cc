#include "spred/models.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "spred/rng.hpp"

namespace spred {

namespace {

Matrix uniform_matrix(Rng& rng, Index rows, Index cols) {
  Matrix M(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) M(r, c) = rng.uniform(-1.0, 1.0);
  return M;
}

}  // namespace

GenericModel random_stable_system(Index N, Index J, Index O,
                                  std::uint64_t seed) {
  if (N < 1 || J < 1 || O < 1)
    throw ShapeError("random_stable_system needs N, J, O >= 1");
  Rng rng(seed);
  Matrix A = uniform_matrix(rng, N, N);
  const Matrix B = uniform_matrix(rng, N, J);
  const Matrix C = uniform_matrix(rng, O, N);
  const double top =
      Eigen::EigenSolver<Matrix>(A, false).eigenvalues().real().maxCoeff();
  A.diagonal().array() -= top + 0.1;
  GenericModel model{ControlSystem(Parametrization::full(N), B, C,
                                   Matrix::Zero(O, J), Vector::Zero(N),
                                   Vector::Zero(N)),
                     flatten(A)};
  return model;
}

GaussianPrior generic_prior(Index N) {
  if (N < 1) throw ShapeError("generic_prior needs N >= 1");
  return GaussianPrior::diagonal(flatten(-Matrix::Identity(N, N)),
                                 Vector::Ones(N * N));
}

void HemodynamicParams::validate() const {
  if (!(tau_s > 0.0 && tau_f > 0.0 && tau_0 > 0.0))
    throw DomainError("hemodynamic time constants must be > 0");
  if (!(E_0 > 0.0 && E_0 < 1.0)) throw DomainError("E_0 must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("alpha must lie in (0, 1)");
}

HemodynamicForward hemodynamic_forward(const HemodynamicParams& p) {
  p.validate();
  HemodynamicForward h;
  h.A = Matrix::Zero(4, 4);
  h.A(0, 0) = -1.0 / p.tau_s;
  h.A(0, 1) = 1.0 / p.tau_f;
  h.A(1, 0) = 1.0;
  h.A(2, 1) = (1.0 / (p.tau_0 * p.E_0)) *
              (1.0 - (1.0 - p.E_0) * (1.0 - std::log(1.0 - p.E_0)));
  h.A(2, 2) = -1.0 / p.tau_0;
  h.A(2, 3) = (1.0 - p.alpha) / (p.tau_0 * p.alpha);
  h.A(3, 1) = 1.0 / p.tau_0;
  h.A(3, 3) = -1.0 / (p.tau_0 * p.alpha);
  h.B = Matrix::Zero(4, 1);
  h.B(0, 0) = 1.0;
  h.C = Matrix::Zero(1, 4);
  h.C(0, 2) = -p.a_1 * p.V_0;
  h.C(0, 3) = p.a_2 * p.V_0;
  return h;
}

FmriModel fmri_assemble(Index n, const HemodynamicParams& hemo) {
  if (n < 1) throw ShapeError("fmri_assemble needs n >= 1");
  const HemodynamicForward fw = hemodynamic_forward(hemo);
  const Index N = 5 * n;

  Matrix offset = Matrix::Zero(N, N);
  Matrix C = Matrix::Zero(n, N);
  for (Index i = 0; i < n; ++i) {
    const Index base = n + 4 * i;
    offset.block(base, base, 4, 4) = fw.A;
    offset.block(base, i, 4, 1) = fw.B;
    C.block(i, base, 1, 4) = fw.C;
  }
  std::vector<Parametrization::Entry> entries;
  entries.reserve(static_cast<std::size_t>(n * n));
  for (Index k = 0; k < n * n; ++k) entries.push_back({k, k / n, k % n, 1.0});

  Matrix B = Matrix::Zero(N, n);
  B.topRows(n) = Matrix::Identity(n, n);

  FmriModel model;
  model.n_regions = n;
  model.hemo = hemo;
  model.system = ControlSystem(
      Parametrization(N, n * n, std::move(offset), std::move(entries), "fmri"),
      std::move(B), std::move(C), Matrix::Zero(n, n), Vector::Zero(N),
      Vector::Zero(N));
  return model;
}

GaussianPrior fmri_prior(Index n) { return generic_prior(n); }

std::array<HemodynamicPriorEntry, 8> hemodynamic_prior() {
  return {{{"tau_s", 0.65, 0.001, false},
           {"tau_f", 0.41, 0.001, false},
           {"tau_0", 0.98, 0.001, false},
           {"E_0", 0.34, 0.001, false},
           {"alpha", 0.32, 0.001, false},
           {"V_0", 1.00, 0.0, true},
           {"a_1", 1.00, 0.0, true},
           {"a_2", 1.00, 0.0, true}}};
}

HemodynamicParams hemodynamic_prior_means() {
  const auto p = hemodynamic_prior();
  return {p[0].mean, p[1].mean, p[2].mean, p[3].mean,
          p[4].mean, p[5].mean, p[6].mean, p[7].mean};
}

}  // namespace spred
