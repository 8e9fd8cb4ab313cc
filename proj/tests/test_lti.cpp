#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "spred/lti.hpp"
#include "test_util.hpp"

using namespace spred;
using testutil::random_matrix;
using testutil::random_vector;

TEST_CASE("vec_inverse is row-major and inverts flatten") {
  Vector theta(6);
  theta << 1, 2, 3, 4, 5, 6;
  CHECK_THROWS_AS(vec_inverse(theta, 2), ShapeError);
  Vector t4(4);
  t4 << 1, 2, 3, 4;
  const Matrix A = vec_inverse(t4, 2);
  CHECK(A(0, 0) == 1);
  CHECK(A(0, 1) == 2);
  CHECK(A(1, 0) == 3);
  CHECK(A(1, 1) == 4);
  CHECK(flatten(A) == t4);
}

TEST_CASE("time grid") {
  const TimeGrid g(0.0, 0.01, 10.0);
  CHECK(g.steps() == 1000);
  CHECK(g.horizon() == doctest::Approx(10.0));
  CHECK_THROWS_AS(TimeGrid(0.0, 0.0, 1.0).validate(), DomainError);
  CHECK_THROWS_AS(TimeGrid(1.0, 0.1, 0.0).validate(), DomainError);
}

TEST_CASE("parametrization map, linear part and adjoint") {
  std::mt19937_64 g(3);
  Matrix offset = random_matrix(g, 3, 3);
  std::vector<Parametrization::Entry> entries = {
      {0, 0, 1, 2.0}, {1, 2, 2, -1.0}, {1, 0, 1, 0.5}};
  const Parametrization param(3, 2, offset, entries, "test");
  Vector th(2);
  th << 0.3, -1.2;
  Matrix expect = offset;
  expect(0, 1) += 2.0 * 0.3 + 0.5 * -1.2;
  expect(2, 2) += -1.0 * -1.2;
  CHECK((param.map(th) - expect).norm() < 1e-15);
  CHECK((param.linear_map(th) - (expect - offset)).norm() < 1e-15);

  // <G, L(theta)> = <adjoint(G), theta> for every G, theta.
  for (int t = 0; t < 5; ++t) {
    const Matrix G = random_matrix(g, 3, 3);
    const Vector x = random_vector(g, 2);
    const double lhs = (G.array() * param.linear_map(x).array()).sum();
    CHECK(lhs == doctest::Approx(param.adjoint(G).dot(x)).epsilon(1e-12));
  }

  const auto full = Parametrization::full(3);
  Vector t9 = random_vector(g, 9);
  CHECK((full.map(t9) - vec_inverse(t9, 3)).norm() == 0.0);
  CHECK_THROWS(Parametrization(3, 2, Matrix(), {{2, 0, 0, 1.0}}, "bad"));
}

TEST_CASE("step and block solve match a naive Euler loop") {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Index N = 1 + trial % 6, J = 1 + trial % 3, O = 1 + trial % 2;
    const auto ss = testutil::random_state_space(g, N, J, O);
    const TimeGrid grid(0.0, 0.01, 2.0);
    const Matrix u = random_matrix(g, grid.steps() + 1, J);
    const Matrix Y_ref = testutil::naive_euler_outputs(ss, u, grid.dt);
    const auto a = simulate(ss, u, grid, SimMethod::step);
    const auto b = simulate(ss, u, grid, SimMethod::block_solve);
    const double scale = Y_ref.cwiseAbs().maxCoeff();
    CHECK((a.outputs - Y_ref).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK((b.outputs - a.outputs).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK(a.times.size() == grid.steps() + 1);
    CHECK(a.states.rows() == grid.steps() + 1);
    CHECK(a.states.cols() == N);
  }
}

TEST_CASE("simulation is linear in input and initial state") {
  std::mt19937_64 g(5);
  auto ss = testutil::random_state_space(g, 4, 2, 2);
  ss.F.setZero();
  const TimeGrid grid(0.0, 0.02, 1.0);
  const Matrix u1 = random_matrix(g, grid.steps() + 1, 2);
  const Matrix u2 = random_matrix(g, grid.steps() + 1, 2);
  auto s1 = ss, s2 = ss, s12 = ss;
  s2.x0 = random_vector(g, 4);
  s12.x0 = 2.0 * s1.x0 - 3.0 * s2.x0;
  const Matrix y1 = simulate(s1, u1, grid).outputs;
  const Matrix y2 = simulate(s2, u2, grid).outputs;
  const Matrix y12 = simulate(s12, 2.0 * u1 - 3.0 * u2, grid).outputs;
  CHECK((y12 - (2.0 * y1 - 3.0 * y2)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("Euler converges to the matrix exponential at first order") {
  std::mt19937_64 g(21);
  StateSpace ss;
  ss.A = testutil::dominant_stable(g, 4);
  ss.B = Matrix::Zero(4, 1);
  ss.C = Matrix::Identity(4, 4);
  ss.D = Matrix::Zero(4, 1);
  ss.F = Vector::Zero(4);
  ss.x0 = random_vector(g, 4);
  const double T = 1.0;
  const Vector exact = (ss.A * T).exp() * ss.x0;
  double prev = 0.0;
  for (double dt : {0.01, 0.005, 0.0025}) {
    const TimeGrid grid(0.0, dt, T);
    const auto tr = simulate(ss, Matrix::Zero(grid.steps() + 1, 1), grid);
    const double err =
        (tr.states.row(grid.steps()).transpose() - exact).norm();
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(2.0).epsilon(0.15));
    prev = err;
  }
}

TEST_CASE("instability names the first bad step") {
  StateSpace ss;
  ss.A = Matrix::Constant(1, 1, 1e4);
  ss.B = Matrix::Zero(1, 1);
  ss.C = Matrix::Identity(1, 1);
  ss.D = Matrix::Zero(1, 1);
  ss.F = Vector::Zero(1);
  ss.x0 = Vector::Ones(1);
  const TimeGrid grid(0.0, 0.1, 100.0);
  const Matrix u = Matrix::Zero(grid.steps() + 1, 1);
  Matrix X;
  const Index bad = integrate(ss, u, grid.dt, X);
  CHECK(bad > 0);
  CHECK(integrate_block(ss, u, grid.dt, X) == bad);
  try {
    simulate(ss, u, grid);
    FAIL("expected InstabilityError");
  } catch (const InstabilityError& e) {
    CHECK(e.step() == bad);
  }
  Matrix Y;
  CHECK_FALSE(simulate_outputs(ss, u, grid.dt, Y));
}

TEST_CASE("realize checks the parameter length") {
  const ControlSystem sys(Parametrization::full(2), Matrix::Identity(2, 1),
                          Matrix::Identity(1, 2), Matrix(), Vector(),
                          Vector());
  CHECK(sys.D.rows() == 1);
  CHECK(sys.F.size() == 2);
  CHECK(sys.x0.size() == 2);
  CHECK_THROWS_AS(realize(sys, Vector::Zero(3)), ShapeError);
  CHECK_THROWS_AS(ControlSystem(Parametrization::full(2), Matrix::Zero(3, 1),
                                Matrix::Zero(1, 2), Matrix(), Vector(),
                                Vector()),
                  ShapeError);
}

TEST_CASE("impulse input") {
  const TimeGrid grid(0.0, 0.05, 1.0);
  const Matrix u = impulse_input(grid, 2, 3.0);
  CHECK(u.rows() == grid.steps() + 1);
  CHECK(u(0, 0) == doctest::Approx(60.0));
  CHECK(u(0, 1) == doctest::Approx(60.0));
  CHECK(u.bottomRows(grid.steps()).cwiseAbs().sum() == 0.0);
  // One Euler step carries the whole impulse: x_1 = magnitude * b.
  StateSpace ss;
  ss.A = Matrix::Constant(1, 1, -1.0);
  ss.B = Matrix::Constant(1, 2, 0.5);
  ss.C = Matrix::Identity(1, 1);
  ss.D = Matrix::Zero(1, 2);
  ss.F = Vector::Zero(1);
  ss.x0 = Vector::Zero(1);
  const auto tr = simulate(ss, u, grid);
  CHECK(tr.states(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("adjoint gradient matches finite differences") {
  std::mt19937_64 g(8);
  const Index N = 3, K = 60;
  const double dt = 0.02;
  StateSpace ss = testutil::random_state_space(g, N, 1, 2);
  const Matrix u = random_matrix(g, K + 1, 1);
  const Matrix Yd = random_matrix(g, K + 1, 2);
  auto phi = [&](const Matrix& A) {
    StateSpace s = ss;
    s.A = A;
    Matrix Y;
    simulate_outputs(s, u, dt, Y);
    return 0.5 * (Y - Yd).squaredNorm();
  };
  Matrix Y, X;
  REQUIRE(simulate_outputs(ss, u, dt, Y, &X));
  const Matrix G = adjoint_gradient(ss.A, ss.C, X, Y - Yd, dt);
  const double h = 1e-6;
  for (Index r = 0; r < N; ++r)
    for (Index c = 0; c < N; ++c) {
      Matrix Ap = ss.A, Am = ss.A;
      Ap(r, c) += h;
      Am(r, c) -= h;
      const double fd = (phi(Ap) - phi(Am)) / (2 * h);
      CHECK(G(r, c) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("noise has the requested moments and is seeded") {
  const Matrix zero = Matrix::Zero(20000, 2);
  const Matrix a = add_noise(zero, 0.25, 42);
  const Matrix b = add_noise(zero, 0.25, 42);
  const Matrix c = add_noise(zero, 0.25, 43);
  CHECK(a == b);
  CHECK(a != c);
  const double n = static_cast<double>(a.size());
  const double mean = a.sum() / n;
  const double var = (a.array() - mean).square().sum() / (n - 1);
  // 40000 samples: sd of the mean is 0.0025, of the variance about 0.0018.
  CHECK(std::abs(mean) < 0.0125);
  CHECK(std::abs(var - 0.25) < 0.01);
  CHECK(add_noise(zero, 0.0, 1) == zero);
  CHECK_THROWS_AS(add_noise(zero, -1.0, 1), DomainError);
}
