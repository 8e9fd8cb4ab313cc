// spred command line: simulate, reduce, invert, benchmark.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "spred/bench.hpp"
#include "spred/inversion.hpp"
#include "spred/io.hpp"
#include "spred/models.hpp"
#include "spred/reduction.hpp"

namespace fs = std::filesystem;
using namespace spred;

namespace {

constexpr int kUsage = 2;
constexpr int kRefused = 3;

struct UsageError : Error {
  using Error::Error;
};

struct ModelArgs {
  std::string model = "generic";
  Index size = 9;
  std::uint64_t seed = 0;
  std::string system_file;
  double t_end = 10.0;
  double dt = 0.01;
  double impulse = 1.0;
  double noise = 1e-4;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Model family: generic or fmri")
        ->check(CLI::IsMember({"generic", "fmri"}));
    app->add_option("--size", size, "N for generic, regions n for fmri");
    app->add_option("--seed", seed, "Seed for the synthetic truth and noise");
    app->add_option("--system", system_file, "System definition file (JSON)");
    app->add_option("--t-end", t_end, "Simulation horizon in seconds");
    app->add_option("--dt", dt, "Time step");
    app->add_option("--impulse", impulse, "Delta impulse magnitude");
    app->add_option("--noise", noise,
                    "Noise variance relative to peak |y|^2 for synthetic data");
  }
};

struct Setup {
  ControlSystem system;
  GaussianPrior prior;
  TimeGrid grid;
  Matrix input;
  std::optional<Vector> theta_true;
  std::optional<Matrix> synthetic_data;
};

Setup make_setup(const ModelArgs& args) {
  Setup s;
  s.grid = TimeGrid(0.0, args.dt, args.t_end);
  if (!args.system_file.empty()) {
    s.system = load_system(args.system_file);
    const auto& tag = s.system.parametrization.tag();
    if (tag == "full") {
      s.prior = generic_prior(s.system.N());
    } else if (tag == "fmri") {
      const auto n = static_cast<Index>(std::lround(
          std::sqrt(static_cast<double>(s.system.P()))));
      s.prior = fmri_prior(n);
    } else {
      throw UsageError("no default prior for parametrization '" + tag + "'");
    }
    s.input = impulse_input(s.grid, s.system.J(), args.impulse);
    return s;
  }
  RunConfig rc = default_config(args.model == "fmri" ? Suite::fmri
                                                     : Suite::generic);
  rc.grid = s.grid;
  rc.impulse = args.impulse;
  rc.noise_variance = args.noise;
  if (args.size < 1) throw UsageError("--size must be >= 1");
  Problem pb = make_problem(rc.suite, args.size, args.seed, rc);
  s.system = std::move(pb.system);
  s.prior = std::move(pb.prior);
  s.input = std::move(pb.data.input);
  s.theta_true = std::move(pb.theta_true);
  s.synthetic_data = std::move(pb.data.outputs);
  return s;
}

Matrix load_data(const std::string& path, const TimeGrid& grid, Index O) {
  const OutputSeries series = read_outputs_csv(path);
  if (series.outputs.rows() != grid.steps() + 1)
    throw UsageError(path + " has " + std::to_string(series.outputs.rows()) +
                     " rows, the time grid has " +
                     std::to_string(grid.steps() + 1) + " nodes");
  if (series.outputs.cols() != O)
    throw UsageError(path + " has " + std::to_string(series.outputs.cols()) +
                     " output columns, the model has " + std::to_string(O));
  return series.outputs;
}

int run_simulate(const ModelArgs& margs, const std::string& out,
                 const std::string& data_out, const std::string& system_out,
                 bool noisy) {
  const Setup s = make_setup(margs);
  if (!s.theta_true) throw UsageError("simulate needs --model (truth parameters)");
  const Trajectory traj = simulate(s.system, *s.theta_true, s.input, s.grid);
  if (!out.empty()) write_trajectory_csv(out, traj);
  if (!data_out.empty())
    write_outputs_csv(data_out, traj.times,
                      noisy ? *s.synthetic_data : traj.outputs);
  if (!system_out.empty()) save_system(system_out, s.system);
  if (out.empty() && data_out.empty() && system_out.empty())
    write_trajectory_csv(std::cout, traj);
  return 0;
}

struct ReduceArgs {
  std::string method = "trust_data_only";
  Index iters = -1;
  std::optional<double> alpha, beta, gamma;
  double p = 2.0;
  std::string selection = "pod_greedy";
  bool trust = false;
  Index pod_rank = 1;
  bool complete = false;
  std::string data;
  std::string out = "reduction";
};

int run_reduce(const ModelArgs& margs, const ReduceArgs& a) {
  const BenchMethod method = parse_method(a.method);
  if (method == BenchMethod::full_order)
    throw UsageError("full_order has no reduction phase");
  const Setup s = make_setup(margs);
  RunConfig rc;
  rc.alpha = a.alpha;
  rc.beta = a.beta;
  rc.gamma = a.gamma;
  rc.p = a.p;
  rc.selection = parse_selection(a.selection);
  rc.pod_rank = a.pod_rank;
  const Index R = a.iters >= 0 ? a.iters : s.system.O();
  ReductionConfig cfg = reduction_config(method, rc, R);
  if (a.trust) cfg.trust_region = true;
  cfg.complete_bases = a.complete;

  std::optional<Matrix> data;
  if (!a.data.empty()) data = load_data(a.data, s.grid, s.system.O());
  try {
    cfg.validate(data.has_value());
  } catch (const ConfigError& e) {
    throw UsageError(std::string(e.what()) + " (pass --data <file>)");
  }

  const ReductionResult res = combined_reduce(
      s.system, s.prior, s.grid, s.input, cfg, data ? &*data : nullptr);
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  save_projection((dir / "projection.txt").string(), res.pair);
  write_matrix_csv((dir / "V.csv").string(), res.pair.V);
  write_matrix_csv((dir / "P.csv").string(), res.pair.P);
  write_trace_csv((dir / "trace.csv").string(), res.trace);
  std::cout << "m = " << res.pair.V.cols() << ", k = " << res.pair.P.cols()
            << ", iterations = " << res.trace.iterations.size()
            << ", full simulations in objective = "
            << res.trace.total_full_sims() << ", wall = "
            << format_double(res.trace.total_ms()) << " ms\n";
  return 0;
}

int run_invert(const ModelArgs& margs, const std::string& proj,
               const std::string& data_file, const std::string& out) {
  const Setup s = make_setup(margs);
  DataSet data;
  data.grid = s.grid;
  data.input = s.input;
  if (!data_file.empty())
    data.outputs = load_data(data_file, s.grid, s.system.O());
  else if (s.synthetic_data)
    data.outputs = *s.synthetic_data;
  else
    throw UsageError("--system needs --data");

  InversionResult res;
  OptimizeOptions opts;
  if (proj.empty()) {
    opts.max_evals = std::max<Index>(2000, 800 * s.system.P());
    res = map_full(s.system, s.prior, data, opts);
  } else {
    const ProjectionPair pair = load_projection(proj);
    const ReducedSystem reduced(s.system, pair.V, pair.P);
    opts.max_evals = std::max<Index>(2000, 800 * reduced.k());
    res = map_reduced(reduced, s.prior, data, opts);
  }
  if (out.empty())
    std::cout << inversion_json(res) << "\n";
  else
    write_inversion_json(out, res);
  return 0;
}

struct BenchArgs {
  std::string suite = "generic";
  std::vector<Index> sizes;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "bench_out";
  std::string config;
  int workers = 0;
  bool full_scale = false;
  bool quiet = false;
};

int run_benchmark(const BenchArgs& a) {
  RunConfig rc = default_config(parse_suite(a.suite));
  if (!a.config.empty()) apply_config_file(a.config, rc);
  if (!a.sizes.empty()) rc.sizes = a.sizes;
  if (!a.methods.empty()) {
    rc.methods.clear();
    for (const auto& m : a.methods) rc.methods.push_back(parse_method(m));
  }
  if (!a.seeds.empty()) rc.seeds = a.seeds;
  if (a.workers > 0) rc.workers = a.workers;
  if (a.full_scale) rc.full_scale = true;
  try {
    rc.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  auto progress = [&](const ExperimentRecord& r) {
    if (a.quiet) return;
    std::cerr << to_string(r.suite) << " size=" << r.size << " seed=" << r.seed
              << " " << to_string(r.method) << ": " << r.status;
    if (r.status == "ok")
      std::cerr << " offline=" << format_double(r.offline_ms)
                << "ms online=" << format_double(r.online_ms)
                << "ms rel_err=" << format_double(r.rel_err);
    else
      std::cerr << " (" << r.message << ")";
    std::cerr << "\n";
  };
  const auto records = run_suite(rc, progress);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  write_results_csv((dir / "results.csv").string(), records);
  write_speedup_csv((dir / "speedup.csv").string(), records);
  write_plot_files(a.out_dir, records);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combined state and parameter reduction of parametrized LTI "
               "systems with MAP inversion"};
  app.require_subcommand(1);

  ModelArgs sim_model;
  std::string sim_out, sim_data_out, sim_system_out;
  bool sim_noisy = false;
  auto* sim = app.add_subcommand("simulate", "Simulate a model at its truth");
  sim_model.add(sim);
  sim->add_option("--out", sim_out, "Trajectory CSV");
  sim->add_option("--data-out", sim_data_out, "Outputs-only CSV (data file)");
  sim->add_option("--system-out", sim_system_out, "Write the system file");
  sim->add_flag("--noisy", sim_noisy, "Add noise to the --data-out outputs");

  ModelArgs red_model;
  ReduceArgs red;
  auto* reduce = app.add_subcommand("reduce", "Build V and P by the greedy loop");
  red_model.add(reduce);
  reduce->add_option("--method", red.method,
                     "original, data_driven, trust, trust_data, trust_data_only");
  reduce->add_option("--iters", red.iters, "Greedy iterations R (default: outputs)");
  reduce->add_option("--alpha", red.alpha, "Model-error weight");
  reduce->add_option("--beta", red.beta, "Prior weight");
  reduce->add_option("--gamma", red.gamma, "Data-misfit weight");
  reduce->add_option("--p", red.p, "Norm order (>= 1)");
  reduce->add_option("--selection", red.selection, "mean, pod or pod_greedy");
  reduce->add_flag("--trust", red.trust, "Force trust-region mode");
  reduce->add_option("--pod-rank", red.pod_rank, "POD modes per iteration");
  reduce->add_flag("--complete", red.complete,
                   "Fill discarded candidates with unit vectors");
  reduce->add_option("--data", red.data, "Data CSV with t and y_* columns");
  reduce->add_option("--out", red.out, "Output directory");

  ModelArgs inv_model;
  std::string inv_proj, inv_data, inv_out;
  auto* invert = app.add_subcommand("invert", "MAP estimation, full or reduced");
  inv_model.add(invert);
  invert->add_option("--proj", inv_proj, "Projection pair file (reduced inversion)");
  invert->add_option("--data", inv_data, "Data CSV");
  invert->add_option("--out", inv_out, "Result JSON (default stdout)");

  BenchArgs bench;
  auto* benchmark = app.add_subcommand("benchmark", "Run an experiment suite");
  benchmark->add_option("--suite", bench.suite, "generic, fmri or extreme");
  benchmark->add_option("--sizes", bench.sizes, "Sizes (N or regions)")
      ->delimiter(',');
  benchmark->add_option("--methods", bench.methods, "Methods")->delimiter(',');
  benchmark->add_option("--seeds", bench.seeds, "Seeds")->delimiter(',');
  benchmark->add_option("--out-dir", bench.out_dir, "Output directory");
  benchmark->add_option("--config", bench.config, "Config file (key = value)");
  benchmark->add_option("--workers", bench.workers, "Parallel workers");
  benchmark->add_flag("--full-scale", bench.full_scale,
                      "Allow extreme sizes above 64");
  benchmark->add_flag("--quiet", bench.quiet, "No per-cell progress");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*sim) return run_simulate(sim_model, sim_out, sim_data_out, sim_system_out, sim_noisy);
    if (*reduce) return run_reduce(red_model, red);
    if (*invert) return run_invert(inv_model, inv_proj, inv_data, inv_out);
    if (*benchmark) return run_benchmark(bench);
  } catch (const MemoryBudgetError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kRefused;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
