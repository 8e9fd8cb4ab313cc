#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spred/common.hpp"
#include "spred/lti.hpp"
#include "spred/optimizer.hpp"
#include "spred/prior.hpp"

namespace spred {

struct ProjectionPair {
  Matrix V;  // N x m
  Matrix P;  // P x k
};

// Galerkin surrogate. A_r(theta_r) = V^T map(P theta_r) V, stored as
// A0 + sum_j theta_r[j] * A_j so assembly never touches full dimensions.
class ReducedSystem {
 public:
  ReducedSystem() = default;
  ReducedSystem(const ControlSystem& system, Matrix V, Matrix P);

  Index m() const { return V_.cols(); }
  Index k() const { return P_.cols(); }
  const Matrix& V() const { return V_; }
  const Matrix& P() const { return P_; }
  const Matrix& B() const { return B_; }
  const Matrix& C() const { return C_; }
  const Matrix& D() const { return D_; }
  const Vector& F() const { return F_; }
  const Vector& x0() const { return x0_; }

  Matrix assemble(const Vector& theta_r) const;
  // Galerkin matrix V^T A V for a full-space A.
  Matrix galerkin(const Matrix& A) const;
  StateSpace realize(const Vector& theta_r) const;
  StateSpace realize_full(const Matrix& A) const;

  Vector lift(const Vector& theta_r) const;
  Vector restrict(const Vector& theta) const;

 private:
  Matrix V_, P_;
  Matrix A0_;
  std::vector<Matrix> Aj_;
  Matrix B_, C_, D_;
  Vector F_, x0_;
};

ReducedSystem project_system(const ControlSystem& system, const Matrix& V,
                             const Matrix& P);

enum class ObjectiveKind { original, data_driven, data_only };
enum class Selection { mean, pod, pod_greedy };

std::string to_string(ObjectiveKind k);
std::string to_string(Selection s);
ObjectiveKind parse_objective(const std::string& s);
Selection parse_selection(const std::string& s);

struct Weights {
  double alpha = 0.5;
  double beta = 0.5;
  double gamma = 0.0;
};

Weights default_weights(ObjectiveKind kind);

// sum |r|^p over all entries, max |r| for p = inf.
double pnorm_p(const Matrix& r, double p);

struct ObjectiveContext {
  const ControlSystem* full = nullptr;
  const ReducedSystem* reduced = nullptr;
  const GaussianPrior* prior = nullptr;
  const Matrix* input = nullptr;
  const Matrix* data = nullptr;
  double dt = 0.01;
  ObjectiveKind kind = ObjectiveKind::original;
  Weights weights;
  double p = 2.0;
  // Optional k x k Gram P^T K^-1 P; when empty the regularizer lifts first.
  Matrix prior_gram;
  // Incremented once per full-order simulation.
  std::size_t* full_sims = nullptr;
  // Parameters whose reduced or full matrix has an eigenvalue with real part
  // >= growth_limit score -inf.
  double growth_limit = std::numeric_limits<double>::infinity();

  void validate() const;
};

// theta is a full parameter vector, restricted by P^T.
double objective(const Vector& theta, const ObjectiveContext& ctx);
// theta_r is the reduced coordinate vector itself (trust-region mode).
double objective_reduced(const Vector& theta_r, const ObjectiveContext& ctx);

std::vector<Vector> select_mean(const Trajectory& traj);
std::vector<Vector> select_pod(const Trajectory& traj, Index rank);
std::vector<Vector> select_pod_greedy(const Trajectory& traj, const Matrix& V,
                                      Index rank);
// Same operations on column snapshots (N x (K+1)).
Vector snapshot_mean(const Matrix& X, double dt, double horizon);
std::vector<Vector> snapshot_pod(const Matrix& X, Index rank);
std::vector<Vector> snapshot_pod_greedy(const Matrix& X, const Matrix& V,
                                        Index rank);

struct InsertResult {
  Matrix basis;
  Index inserted = 0;
  Index discarded = 0;
};

InsertResult orthogonalize_insert(const Matrix& basis,
                                  const std::vector<Vector>& candidates,
                                  double tol = 1e-10);

// Canonical unit vector with the largest residual against the basis; empty
// when the basis already spans everything (within tol).
std::optional<Vector> completion_candidate(const Matrix& basis,
                                           double tol = 1e-10);

Vector trust_lift(const Vector& theta_tr, const Matrix& P);

struct ReductionConfig {
  Index iterations = 1;
  ObjectiveKind objective = ObjectiveKind::original;
  std::optional<Weights> weights;
  double p = 2.0;
  Selection selection = Selection::pod_greedy;
  bool trust_region = false;
  Index pod_rank = 1;
  bool complete_bases = false;
  double discard_tol = 1e-10;
  // Restrict the search to Hurwitz parameters when the prior-mean system is
  // Hurwitz.
  bool stable_only = true;
  OptimizeOptions optimizer;
  // Evaluation budget per iteration: max(optimizer.max_evals, evals_per_dim*d).
  Index evals_per_dim = 0;

  Weights resolved_weights() const;
  void validate(bool have_data) const;
};

struct IterationRecord {
  Index iter = 0;
  double objective = 0.0;
  Index dim_P = 0;
  Index dim_V = 0;
  std::size_t full_sims = 0;
  std::size_t support_sims = 0;
  double wall_ms = 0.0;
  Index search_dim = 0;
  Index evals = 0;
  StopReason reason = StopReason::max_evals;
  bool optimizer_failed = false;
  Index discarded_P = 0;
  Index discarded_V = 0;
  Vector theta;
  std::string note;
};

struct ReductionTrace {
  std::vector<IterationRecord> iterations;
  std::size_t init_sims = 0;
  double init_ms = 0.0;

  std::size_t total_full_sims() const;
  double total_ms() const;
};

struct ReductionResult {
  ProjectionPair pair;
  ReductionTrace trace;
};

// Greedy offline loop. Throws MemoryBudgetError when the optimizer refuses
// to start; other optimizer failures are recorded in the trace.
ReductionResult combined_reduce(const ControlSystem& system,
                                const GaussianPrior& prior,
                                const TimeGrid& grid, const Matrix& input,
                                const ReductionConfig& config,
                                const Matrix* data = nullptr);

// Full-space gradient of the configured objective at theta with the data
// misfit taken on the full model. Used to grow P in trust-region mode.
Vector expansion_direction(const Vector& theta, const ObjectiveContext& ctx,
                           const Matrix& X_full, const Matrix& Y_full);

}  // namespace spred
