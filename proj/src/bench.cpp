#include "spred/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "spred/io.hpp"
#include "spred/models.hpp"

namespace spred {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

Index to_index(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw ConfigError("config key '" + key + "' needs an integer");
  return static_cast<Index>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "' needs true/false");
}

double ms_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t)
      .count();
}

Index round_sqrt(Index N) {
  return std::max<Index>(1, static_cast<Index>(std::lround(std::sqrt(static_cast<double>(N)))));
}

}  // namespace

std::string to_string(BenchMethod m) {
  switch (m) {
    case BenchMethod::full_order: return "full_order";
    case BenchMethod::original: return "original";
    case BenchMethod::data_driven: return "data_driven";
    case BenchMethod::trust: return "trust";
    case BenchMethod::trust_data: return "trust_data";
    case BenchMethod::trust_data_only: return "trust_data_only";
  }
  return "?";
}

std::string to_string(Suite s) {
  switch (s) {
    case Suite::generic: return "generic";
    case Suite::fmri: return "fmri";
    case Suite::extreme: return "extreme";
  }
  return "?";
}

const std::vector<BenchMethod>& all_methods() {
  static const std::vector<BenchMethod> methods = {
      BenchMethod::full_order, BenchMethod::original,
      BenchMethod::data_driven, BenchMethod::trust,
      BenchMethod::trust_data, BenchMethod::trust_data_only};
  return methods;
}

BenchMethod parse_method(const std::string& s) {
  for (auto m : all_methods())
    if (to_string(m) == s) return m;
  throw ConfigError("unknown method '" + s + "'");
}

Suite parse_suite(const std::string& s) {
  if (s == "generic") return Suite::generic;
  if (s == "fmri") return Suite::fmri;
  if (s == "extreme") return Suite::extreme;
  throw ConfigError("unknown suite '" + s + "'");
}

void RunConfig::validate() const {
  grid.validate();
  if (sizes.empty()) throw ConfigError("no sizes configured");
  if (methods.empty()) throw ConfigError("no methods configured");
  if (seeds.empty()) throw ConfigError("no seeds configured");
  for (Index s : sizes)
    if (s < 1) throw ConfigError("sizes must be >= 1");
  if (suite == Suite::extreme && !full_scale)
    for (Index s : sizes)
      if (s > 64)
        throw ConfigError("extreme sizes above 64 need full_scale = true");
  if (r_rule != "outputs" && r_rule != "regions") {
    bool numeric = !r_rule.empty() &&
                   std::all_of(r_rule.begin(), r_rule.end(),
                               [](char c) { return c >= '0' && c <= '9'; });
    if (!numeric) throw ConfigError("r_rule must be outputs, regions or a count");
  }
  if (!(p >= 1.0)) throw ConfigError("p must be >= 1");
  if (pod_rank < 1) throw ConfigError("pod_rank must be >= 1");
  if (!(noise_variance >= 0.0)) throw ConfigError("noise_variance must be >= 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (offline_min_evals < 1 || online_min_evals < 1)
    throw ConfigError("evaluation budgets must be >= 1");
}

RunConfig default_config(Suite suite) {
  RunConfig c;
  c.suite = suite;
  c.seeds = {0, 1, 2};
  switch (suite) {
    case Suite::generic:
      c.sizes = {9, 16};
      c.methods = all_methods();
      c.r_rule = "outputs";
      break;
    case Suite::fmri:
      c.sizes = {9};
      c.methods = all_methods();
      c.r_rule = "regions";
      break;
    case Suite::extreme:
      c.sizes = {64};
      c.methods = {BenchMethod::full_order, BenchMethod::original,
                   BenchMethod::trust_data, BenchMethod::trust_data_only};
      c.r_rule = "outputs";
      c.seeds = {0};
      break;
  }
  return c;
}

void apply_config_text(const std::string& text, RunConfig& c) {
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (key == "suite") {
      c.suite = parse_suite(v);
    } else if (key == "sizes") {
      c.sizes.clear();
      for (const auto& s : split_list(v)) c.sizes.push_back(to_index(key, s));
    } else if (key == "methods") {
      c.methods.clear();
      for (const auto& s : split_list(v)) c.methods.push_back(parse_method(s));
    } else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& s : split_list(v))
        c.seeds.push_back(static_cast<std::uint64_t>(to_index(key, s)));
    } else if (key == "r_rule") {
      c.r_rule = v;
    } else if (key == "alpha") {
      c.alpha = to_double(key, v);
    } else if (key == "beta") {
      c.beta = to_double(key, v);
    } else if (key == "gamma") {
      c.gamma = to_double(key, v);
    } else if (key == "p") {
      c.p = v == "inf" ? std::numeric_limits<double>::infinity()
                       : to_double(key, v);
    } else if (key == "pod_rank") {
      c.pod_rank = to_index(key, v);
    } else if (key == "selection") {
      c.selection = parse_selection(v);
    } else if (key == "t_start") {
      c.grid.t_start = to_double(key, v);
    } else if (key == "dt") {
      c.grid.dt = to_double(key, v);
    } else if (key == "t_end") {
      c.grid.t_end = to_double(key, v);
    } else if (key == "impulse") {
      c.impulse = to_double(key, v);
    } else if (key == "noise_variance") {
      c.noise_variance = to_double(key, v);
    } else if (key == "offline_min_evals") {
      c.offline_min_evals = to_index(key, v);
    } else if (key == "offline_evals_per_dim") {
      c.offline_evals_per_dim = to_index(key, v);
    } else if (key == "online_min_evals") {
      c.online_min_evals = to_index(key, v);
    } else if (key == "online_evals_per_dim") {
      c.online_evals_per_dim = to_index(key, v);
    } else if (key == "memory_budget_mb") {
      c.memory_budget =
          static_cast<std::size_t>(to_double(key, v) * 1024.0 * 1024.0);
    } else if (key == "workers") {
      c.workers = static_cast<int>(to_index(key, v));
    } else if (key == "full_scale") {
      c.full_scale = to_bool(key, v);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

void apply_config_file(const std::string& path, RunConfig& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(ss.str(), config);
}

Problem make_problem(Suite suite, Index size, std::uint64_t seed,
                     const RunConfig& config) {
  Problem pb;
  pb.size = size;
  pb.seed = seed;
  if (suite == Suite::fmri) {
    FmriModel fm = fmri_assemble(size, hemodynamic_prior_means());
    pb.system = std::move(fm.system);
    pb.theta_true = random_stable_system(size, 1, 1, seed).theta_true;
    pb.prior = fmri_prior(size);
    pb.model = "fmri";
  } else {
    const Index io = round_sqrt(size);
    GenericModel gm = random_stable_system(size, io, io, seed);
    pb.system = std::move(gm.system);
    pb.theta_true = std::move(gm.theta_true);
    pb.prior = generic_prior(size);
    pb.model = "generic";
  }

  if (config.r_rule == "outputs")
    pb.R = pb.system.O();
  else if (config.r_rule == "regions")
    pb.R = suite == Suite::fmri ? size : pb.system.O();
  else
    pb.R = static_cast<Index>(std::stoll(config.r_rule));

  pb.data.grid = config.grid;
  pb.data.input = impulse_input(config.grid, pb.system.J(), config.impulse);
  pb.y_true =
      simulate(pb.system, pb.theta_true, pb.data.input, config.grid).outputs;
  const double peak = pb.y_true.cwiseAbs().maxCoeff();
  pb.data.noise_variance = config.noise_variance * peak * peak;
  pb.data.outputs = add_noise(pb.y_true, pb.data.noise_variance,
                              seed * 7919u + 104729u);
  return pb;
}

ReductionConfig reduction_config(BenchMethod method, const RunConfig& config,
                                 Index R) {
  ReductionConfig rc;
  rc.iterations = R;
  switch (method) {
    case BenchMethod::original:
      rc.objective = ObjectiveKind::original;
      break;
    case BenchMethod::data_driven:
      rc.objective = ObjectiveKind::data_driven;
      break;
    case BenchMethod::trust:
      rc.objective = ObjectiveKind::original;
      rc.trust_region = true;
      break;
    case BenchMethod::trust_data:
      rc.objective = ObjectiveKind::data_driven;
      rc.trust_region = true;
      break;
    case BenchMethod::trust_data_only:
      rc.objective = ObjectiveKind::data_only;
      rc.trust_region = true;
      break;
    case BenchMethod::full_order:
      throw ConfigError("full_order has no reduction phase");
  }
  if (config.alpha || config.beta || config.gamma) {
    Weights w = default_weights(rc.objective);
    if (config.alpha) w.alpha = *config.alpha;
    if (config.beta) w.beta = *config.beta;
    if (config.gamma) w.gamma = *config.gamma;
    if (rc.objective == ObjectiveKind::original) w.gamma = 0.0;
    if (rc.objective == ObjectiveKind::data_only) w.alpha = 0.0;
    rc.weights = w;
  }
  rc.p = config.p;
  rc.selection = config.selection;
  rc.pod_rank = config.pod_rank;
  rc.optimizer.max_evals = config.offline_min_evals;
  rc.optimizer.memory_budget = config.memory_budget;
  rc.evals_per_dim = config.offline_evals_per_dim;
  return rc;
}

OptimizeOptions online_options(const RunConfig& config, Index dim) {
  OptimizeOptions o;
  o.max_evals = std::max(config.online_min_evals,
                         config.online_evals_per_dim * dim);
  o.memory_budget = config.memory_budget;
  return o;
}

ExperimentRecord run_cell(const RunConfig& config, const Problem& pb,
                          BenchMethod method) {
  ExperimentRecord rec;
  rec.suite = config.suite;
  rec.model = pb.model;
  rec.method = method;
  rec.size = pb.size;
  rec.N = pb.system.N();
  rec.P_dim = pb.system.P();
  rec.R = pb.R;
  rec.seed = pb.seed;
  try {
    if (method == BenchMethod::full_order) {
      const InversionResult inv = map_full(
          pb.system, pb.prior, pb.data, online_options(config, pb.system.P()));
      rec.online_ms = inv.online_time_s * 1e3;
      rec.rel_err = relative_output_error(inv.fitted_outputs, pb.y_true);
      rec.k = pb.system.P();
      rec.m = pb.system.N();
    } else {
      const ReductionConfig rc = reduction_config(method, config, pb.R);
      const auto t0 = std::chrono::steady_clock::now();
      const ReductionResult red = combined_reduce(
          pb.system, pb.prior, pb.data.grid, pb.data.input, rc,
          &pb.data.outputs);
      const ReducedSystem reduced(pb.system, red.pair.V, red.pair.P);
      rec.offline_ms = ms_since(t0);
      rec.full_sims = red.trace.total_full_sims();
      rec.k = reduced.k();
      rec.m = reduced.m();
      const InversionResult inv = map_reduced(
          reduced, pb.prior, pb.data, online_options(config, reduced.k()));
      rec.online_ms = inv.online_time_s * 1e3;
      rec.rel_err = relative_output_error(inv.fitted_outputs, pb.y_true);
    }
    if (!std::isfinite(rec.rel_err)) {
      rec.status = "failed";
      rec.message = "fitted model is unstable";
    }
  } catch (const MemoryBudgetError& e) {
    rec.status = "infeasible";
    rec.message = e.what();
    rec.offline_ms = rec.online_ms = 0.0;
    rec.rel_err = std::numeric_limits<double>::quiet_NaN();
  } catch (const std::exception& e) {
    rec.status = "failed";
    rec.message = e.what();
    rec.rel_err = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

std::vector<ExperimentRecord> run_suite(const RunConfig& config,
                                        const Progress& progress) {
  config.validate();
  struct Cell {
    Index size;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (Index size : config.sizes)
    for (auto seed : config.seeds) cells.push_back({size, seed});

  const std::size_t per_cell = config.methods.size();
  std::vector<ExperimentRecord> records(cells.size() * per_cell);
  std::atomic<std::size_t> next{0};
  std::mutex report;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Problem pb =
          make_problem(config.suite, cells[i].size, cells[i].seed, config);
      for (std::size_t j = 0; j < per_cell; ++j) {
        records[i * per_cell + j] = run_cell(config, pb, config.methods[j]);
        if (progress) {
          std::lock_guard<std::mutex> lock(report);
          progress(records[i * per_cell + j]);
        }
      }
    }
  };
  if (config.workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < config.workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

struct Summary {
  double offline = 0, online = 0, total = 0, rel_err = 0;
  int count = 0;
};

// Means over successful seeds, keyed by (size, method).
std::map<std::pair<Index, BenchMethod>, Summary> summarize(
    const std::vector<ExperimentRecord>& records) {
  std::map<std::pair<Index, BenchMethod>, Summary> out;
  for (const auto& r : records) {
    if (r.status != "ok") continue;
    auto& s = out[{r.size, r.method}];
    s.offline += r.offline_ms;
    s.online += r.online_ms;
    s.total += r.total_ms();
    s.rel_err += r.rel_err;
    ++s.count;
  }
  for (auto& [key, s] : out) {
    s.offline /= s.count;
    s.online /= s.count;
    s.total /= s.count;
    s.rel_err /= s.count;
  }
  return out;
}

std::vector<Index> sizes_of(const std::vector<ExperimentRecord>& records) {
  std::vector<Index> sizes;
  for (const auto& r : records)
    if (std::find(sizes.begin(), sizes.end(), r.size) == sizes.end())
      sizes.push_back(r.size);
  return sizes;
}

std::vector<BenchMethod> methods_of(const std::vector<ExperimentRecord>& records) {
  std::vector<BenchMethod> methods;
  for (const auto& r : records)
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
  return methods;
}

std::string csv_text(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

void write_results_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records) {
  auto out = open_out(path);
  out << "# spred-results v1\n";
  out << "suite,model,method,size,N,P_dim,R,k,m,seed,status,offline_ms,"
         "online_ms,total_ms,rel_err,full_sims,message\n";
  for (const auto& r : records)
    out << to_string(r.suite) << "," << r.model << "," << to_string(r.method)
        << "," << r.size << "," << r.N << "," << r.P_dim << "," << r.R << ","
        << r.k << "," << r.m << "," << r.seed << "," << r.status << ","
        << format_double(r.offline_ms) << "," << format_double(r.online_ms)
        << "," << format_double(r.total_ms()) << ","
        << format_double(r.rel_err) << "," << r.full_sims << ","
        << csv_text(r.message) << "\n";
}

void write_speedup_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records) {
  const auto summary = summarize(records);
  auto out = open_out(path);
  out << "# spred-speedup v1\n";
  out << "size,method,total_ms,speedup_vs_full_order,speedup_vs_original\n";
  auto ratio = [&](Index size, BenchMethod base, double total) -> std::string {
    auto it = summary.find({size, base});
    if (it == summary.end() || !(total > 0.0)) return "-";
    return format_double(it->second.total / total);
  };
  for (Index size : sizes_of(records))
    for (BenchMethod m : methods_of(records)) {
      auto it = summary.find({size, m});
      if (it == summary.end()) {
        out << size << "," << to_string(m) << ",-,-,-\n";
        continue;
      }
      const double total = it->second.total;
      out << size << "," << to_string(m) << "," << format_double(total) << ","
          << ratio(size, BenchMethod::full_order, total) << ","
          << ratio(size, BenchMethod::original, total) << "\n";
    }
}

void write_plot_files(const std::string& dir,
                      const std::vector<ExperimentRecord>& records) {
  const auto summary = summarize(records);
  const auto sizes = sizes_of(records);
  const auto methods = methods_of(records);
  auto emit = [&](const std::string& name, double Summary::*field) {
    auto out = open_out((std::filesystem::path(dir) / name).string());
    out << "# size";
    for (auto m : methods) out << " " << to_string(m);
    out << "\n";
    for (Index size : sizes) {
      out << size;
      for (auto m : methods) {
        auto it = summary.find({size, m});
        out << " "
            << (it == summary.end() ? std::string("nan")
                                    : format_double(it->second.*field));
      }
      out << "\n";
    }
  };
  emit("plot_offline.dat", &Summary::offline);
  emit("plot_online.dat", &Summary::online);
  emit("plot_relerr.dat", &Summary::rel_err);
}

}  // namespace spred
