#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <set>

#include "spred/models.hpp"

using namespace spred;

TEST_CASE("random stable system") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = random_stable_system(7, 3, 2, seed);
    const Matrix A = vec_inverse(m.theta_true, 7);
    const double top =
        Eigen::EigenSolver<Matrix>(A, false).eigenvalues().real().maxCoeff();
    CHECK(top == doctest::Approx(-0.1).epsilon(1e-9));
    CHECK(m.system.B.rows() == 7);
    CHECK(m.system.B.cols() == 3);
    CHECK(m.system.C.rows() == 2);
    CHECK(m.system.B.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(m.system.P() == 49);
  }
  const auto a = random_stable_system(4, 1, 1, 3);
  const auto b = random_stable_system(4, 1, 1, 3);
  const auto c = random_stable_system(4, 1, 1, 4);
  CHECK(a.theta_true == b.theta_true);
  CHECK(a.theta_true != c.theta_true);
  CHECK_THROWS_AS(random_stable_system(0, 1, 1, 0), ShapeError);
}

TEST_CASE("generic prior") {
  const auto p = generic_prior(3);
  CHECK(p.dim() == 9);
  CHECK(p.is_diagonal());
  CHECK(vec_inverse(p.mean(), 3) == -Matrix::Identity(3, 3));
  CHECK(p.variances() == Vector::Ones(9));
}

TEST_CASE("hemodynamic forward entries follow the printed expressions") {
  HemodynamicParams h;
  h.tau_s = 0.7;
  h.tau_f = 0.45;
  h.tau_0 = 1.1;
  h.E_0 = 0.3;
  h.alpha = 0.35;
  h.V_0 = 2.0;
  h.a_1 = 1.5;
  h.a_2 = 0.5;
  const auto f = hemodynamic_forward(h);
  const double E = h.E_0, t0 = h.tau_0, a = h.alpha;
  Matrix A(4, 4);
  A << -1 / h.tau_s, 1 / h.tau_f, 0, 0,  //
      1, 0, 0, 0,                        //
      0, (1 - (1 - E) * (1 - std::log(1 - E))) / (t0 * E), -1 / t0,
      (1 - a) / (t0 * a),  //
      0, 1 / t0, 0, -1 / (t0 * a);
  CHECK((f.A - A).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(f.B(0, 0) == 1.0);
  CHECK(f.B.bottomRows(3).isZero());
  CHECK(f.C(0, 0) == 0.0);
  CHECK(f.C(0, 1) == 0.0);
  CHECK(f.C(0, 2) == doctest::Approx(-3.0));
  CHECK(f.C(0, 3) == doctest::Approx(1.0));

  h.E_0 = 1.0;
  CHECK_THROWS_AS(hemodynamic_forward(h), DomainError);
}

TEST_CASE("hemodynamic prior table") {
  const auto p = hemodynamic_prior();
  CHECK(p[0].name == "tau_s");
  CHECK(p[0].mean == 0.65);
  CHECK(p[1].mean == 0.41);
  CHECK(p[2].mean == 0.98);
  CHECK(p[3].mean == 0.34);
  CHECK(p[4].mean == 0.32);
  for (int i = 0; i < 5; ++i) {
    CHECK(p[static_cast<std::size_t>(i)].variance == 0.001);
    CHECK_FALSE(p[static_cast<std::size_t>(i)].fixed);
  }
  for (int i = 5; i < 8; ++i) {
    CHECK(p[static_cast<std::size_t>(i)].mean == 1.0);
    CHECK(p[static_cast<std::size_t>(i)].fixed);
  }
  const auto m = hemodynamic_prior_means();
  CHECK(m.tau_s == 0.65);
  CHECK(m.alpha == 0.32);
}

TEST_CASE("fMRI assembly layout") {
  const auto model = fmri_assemble(9, hemodynamic_prior_means());
  const auto& sys = model.system;
  CHECK(sys.N() == 45);
  CHECK(sys.P() == 81);
  CHECK(sys.J() == 9);
  CHECK(sys.O() == 9);
  const auto fw = hemodynamic_forward(hemodynamic_prior_means());

  Vector theta = Vector::LinSpaced(81, -1.0, 1.0);
  const Matrix A = sys.parametrization.map(theta);
  CHECK((A.topLeftCorner(9, 9) - vec_inverse(theta, 9)).norm() == 0.0);
  CHECK(A.topRightCorner(9, 36).isZero());
  for (Index i = 0; i < 9; ++i) {
    const Index b = 9 + 4 * i;
    CHECK((A.block(b, b, 4, 4) - fw.A).norm() == 0.0);
    CHECK((A.block(b, 0, 4, 9).col(i) - fw.B).norm() == 0.0);
    Matrix rest = A.block(b, 0, 4, 9);
    rest.col(i).setZero();
    CHECK(rest.isZero());
    CHECK((sys.C.block(i, b, 1, 4) - fw.C).norm() == 0.0);
  }
  // Hemodynamic blocks do not couple across regions.
  for (Index i = 0; i < 9; ++i)
    for (Index j = 0; j < 9; ++j)
      if (i != j) CHECK(A.block(9 + 4 * i, 9 + 4 * j, 4, 4).isZero());
  CHECK(sys.B.topRows(9) == Matrix::Identity(9, 9));
  CHECK(sys.B.bottomRows(36).isZero());
  CHECK(sys.parametrization.tag() == "fmri");
}

TEST_CASE("fMRI outputs are finite for the prior mean") {
  const auto model = fmri_assemble(3, hemodynamic_prior_means());
  const TimeGrid grid(0.0, 0.01, 10.0);
  const auto tr = simulate(model.system, fmri_prior(3).mean(),
                           impulse_input(grid, 3, 1.0), grid);
  CHECK(tr.outputs.allFinite());
  CHECK(tr.outputs.cwiseAbs().maxCoeff() > 0.0);
}
