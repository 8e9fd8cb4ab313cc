#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spred/common.hpp"

namespace spred {

struct TimeGrid {
  double t_start = 0.0;
  double dt = 0.01;
  double t_end = 1.0;

  TimeGrid() = default;
  TimeGrid(double start, double step, double end);

  void validate() const;
  Index steps() const;  // K
  double time(Index k) const { return t_start + dt * static_cast<double>(k); }
  double horizon() const { return dt * static_cast<double>(steps()); }
};

// Row-major vec^-1: theta[r*N + c] -> A(r, c).
Matrix vec_inverse(const Vector& theta, Index N);
Vector flatten(const Matrix& A);

// theta -> A(theta) = offset + sum_i theta_i * L_i, with every L_i a sparse
// pattern of (row, col, coef) entries.
class Parametrization {
 public:
  struct Entry {
    Index param;
    Index row;
    Index col;
    double coef;
  };

  Parametrization() = default;
  Parametrization(Index state_dim, Index param_dim, Matrix offset,
                  std::vector<Entry> entries, std::string tag);

  // Every entry of A is its own parameter, ordered row-major.
  static Parametrization full(Index N);

  Index state_dim() const { return state_dim_; }
  Index param_dim() const { return param_dim_; }
  const std::string& tag() const { return tag_; }
  const Matrix& offset() const { return offset_; }
  const std::vector<Entry>& entries() const { return entries_; }
  bool has_offset() const { return has_offset_; }

  Matrix map(const Vector& theta) const;
  // Linear part only, no offset.
  Matrix linear_map(const Vector& theta) const;
  // Pullback of a matrix gradient dPhi/dA to dPhi/dtheta.
  Vector adjoint(const Matrix& G) const;

 private:
  Index state_dim_ = 0;
  Index param_dim_ = 0;
  Matrix offset_;
  std::vector<Entry> entries_;
  std::string tag_;
  bool has_offset_ = false;
};

struct ControlSystem {
  Parametrization parametrization;
  Matrix B;  // N x J
  Matrix C;  // O x N
  Matrix D;  // O x J
  Vector F;  // N
  Vector x0;  // N

  ControlSystem() = default;
  ControlSystem(Parametrization param, Matrix B, Matrix C, Matrix D, Vector F,
                Vector x0);

  Index N() const { return parametrization.state_dim(); }
  Index J() const { return B.cols(); }
  Index O() const { return C.rows(); }
  Index P() const { return parametrization.param_dim(); }

  void validate() const;
};

struct Trajectory {
  Vector times;    // K+1
  Matrix states;   // (K+1) x N
  Matrix outputs;  // (K+1) x O
};

enum class SimMethod { block_solve, step };

// A concrete (non-parametric) state space model, used by the full and the
// reduced systems alike.
struct StateSpace {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  Vector F;
  Vector x0;
};

StateSpace realize(const ControlSystem& system, const Vector& theta);

// Forward Euler into columns of X (N x (K+1)). Returns the first step whose
// state is non-finite, or -1.
Index integrate(const StateSpace& ss, const Matrix& input, double dt,
                Matrix& X);
Index integrate_block(const StateSpace& ss, const Matrix& input, double dt,
                      Matrix& X);

// Outputs (K+1) x O from column states.
Matrix outputs_from_states(const StateSpace& ss, const Matrix& X,
                           const Matrix& input);

// Non-throwing outputs-only simulation; false when the state blows up.
bool simulate_outputs(const StateSpace& ss, const Matrix& input, double dt,
                      Matrix& Y, Matrix* X = nullptr);

Trajectory simulate(const StateSpace& ss, const Matrix& input,
                    const TimeGrid& grid, SimMethod method = SimMethod::step);
Trajectory simulate(const ControlSystem& system, const Vector& theta,
                    const Matrix& input, const TimeGrid& grid,
                    SimMethod method = SimMethod::step);

// dPhi/dA for Phi = sum_k phi_k(y_k), given column states X of the forward
// run and E(k, :) = dphi_k/dy_k.
Matrix adjoint_gradient(const Matrix& A, const Matrix& C, const Matrix& X,
                        const Matrix& E, double dt);

Matrix impulse_input(const TimeGrid& grid, Index J, double magnitude);
Matrix add_noise(const Matrix& outputs, double variance, std::uint64_t seed);

}  // namespace spred
