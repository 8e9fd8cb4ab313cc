#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spred/inversion.hpp"
#include "spred/lti.hpp"
#include "spred/prior.hpp"
#include "spred/reduction.hpp"

namespace spred {

enum class BenchMethod {
  full_order,
  original,
  data_driven,
  trust,
  trust_data,
  trust_data_only,
};

enum class Suite { generic, fmri, extreme };

std::string to_string(BenchMethod m);
std::string to_string(Suite s);
BenchMethod parse_method(const std::string& s);
Suite parse_suite(const std::string& s);
const std::vector<BenchMethod>& all_methods();

struct RunConfig {
  Suite suite = Suite::generic;
  std::vector<Index> sizes;
  std::vector<BenchMethod> methods;
  std::vector<std::uint64_t> seeds;
  // "outputs", "regions" or a fixed iteration count.
  std::string r_rule = "outputs";
  // Unset weights take the objective's defaults.
  std::optional<double> alpha, beta, gamma;
  double p = 2.0;
  Index pod_rank = 1;
  Selection selection = Selection::pod_greedy;
  TimeGrid grid{0.0, 0.01, 10.0};
  double impulse = 1.0;
  // Noise variance relative to (peak |y_true|)^2.
  double noise_variance = 1e-4;
  Index offline_min_evals = 2000;
  Index offline_evals_per_dim = 100;
  Index online_min_evals = 2000;
  Index online_evals_per_dim = 800;
  std::size_t memory_budget = default_memory_budget();
  int workers = 1;
  bool full_scale = false;

  void validate() const;
};

RunConfig default_config(Suite suite);
// key = value per line, '#' starts a comment. Later keys override earlier.
void apply_config_text(const std::string& text, RunConfig& config);
void apply_config_file(const std::string& path, RunConfig& config);

struct Problem {
  std::string model;
  Index size = 0;
  std::uint64_t seed = 0;
  ControlSystem system;
  Vector theta_true;
  GaussianPrior prior;
  DataSet data;
  Matrix y_true;
  Index R = 0;
};

Problem make_problem(Suite suite, Index size, std::uint64_t seed,
                     const RunConfig& config);

struct ExperimentRecord {
  Suite suite = Suite::generic;
  std::string model;
  BenchMethod method = BenchMethod::full_order;
  Index size = 0;
  Index N = 0;
  Index P_dim = 0;
  Index R = 0;
  Index k = 0;
  Index m = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | infeasible | failed
  double offline_ms = 0.0;
  double online_ms = 0.0;
  double rel_err = 0.0;
  std::size_t full_sims = 0;
  std::string message;

  double total_ms() const { return offline_ms + online_ms; }
};

ReductionConfig reduction_config(BenchMethod method, const RunConfig& config,
                                 Index R);
OptimizeOptions online_options(const RunConfig& config, Index dim);

ExperimentRecord run_cell(const RunConfig& config, const Problem& problem,
                          BenchMethod method);

using Progress = std::function<void(const ExperimentRecord&)>;
std::vector<ExperimentRecord> run_suite(const RunConfig& config,
                                        const Progress& progress = {});

void write_results_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records);
void write_speedup_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records);
// plot_offline.dat, plot_online.dat, plot_relerr.dat in dir.
void write_plot_files(const std::string& dir,
                      const std::vector<ExperimentRecord>& records);

}  // namespace spred
