#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "spred/bench.hpp"

using namespace spred;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  RunConfig c = default_config(Suite::generic);
  apply_config_text(
      "sizes = 4\n"
      "seeds = 0\n"
      "t_end = 2\n"
      "dt = 0.02\n"
      "offline_min_evals = 100\n"
      "offline_evals_per_dim = 5\n"
      "online_min_evals = 200\n"
      "online_evals_per_dim = 20\n",
      c);
  return c;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("suite defaults") {
  const auto g = default_config(Suite::generic);
  CHECK(g.sizes == std::vector<Index>{9, 16});
  CHECK(g.seeds.size() == 3);
  CHECK(g.methods.size() == 6);
  CHECK(g.grid.dt == 0.01);
  CHECK(g.grid.t_end == 10.0);
  CHECK(g.noise_variance == 1e-4);
  const auto e = default_config(Suite::extreme);
  CHECK(e.sizes == std::vector<Index>{64});
  CHECK(e.methods.size() == 4);
  CHECK(default_config(Suite::fmri).r_rule == "regions");
}

TEST_CASE("config text parsing") {
  RunConfig c = default_config(Suite::generic);
  apply_config_text(
      "# comment\n"
      "sizes = 3, 5\n"
      "methods = trust_data_only , original\n"
      "alpha = 0.2   # trailing comment\n"
      "p = 1\n"
      "selection = pod\n"
      "memory_budget_mb = 2\n"
      "\n",
      c);
  CHECK(c.sizes == std::vector<Index>{3, 5});
  REQUIRE(c.methods.size() == 2);
  CHECK(c.methods[0] == BenchMethod::trust_data_only);
  CHECK(c.alpha.value() == 0.2);
  CHECK_FALSE(c.beta.has_value());
  CHECK(c.p == 1.0);
  CHECK(c.selection == Selection::pod);
  CHECK(c.memory_budget == 2u * 1024u * 1024u);

  CHECK_THROWS_AS(apply_config_text("colour = red\n", c), ConfigError);
  CHECK_THROWS_AS(apply_config_text("sizes\n", c), ConfigError);
  CHECK_THROWS_AS(apply_config_text("p = abc\n", c), ConfigError);
  CHECK_THROWS_AS(apply_config_text("methods = fastest\n", c), ConfigError);
}

TEST_CASE("config validation") {
  RunConfig c = default_config(Suite::extreme);
  c.sizes = {128};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.full_scale = true;
  CHECK_NOTHROW(c.validate());
  c = default_config(Suite::generic);
  c.r_rule = "many";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.r_rule = "3";
  CHECK_NOTHROW(c.validate());
  c.workers = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("problem construction") {
  const RunConfig c = small_config();
  const Problem g = make_problem(Suite::generic, 9, 1, c);
  CHECK(g.system.N() == 9);
  CHECK(g.system.J() == 3);
  CHECK(g.system.O() == 3);
  CHECK(g.R == 3);
  const double peak = g.y_true.cwiseAbs().maxCoeff();
  CHECK(g.data.noise_variance == doctest::Approx(1e-4 * peak * peak));
  CHECK(g.data.outputs != g.y_true);

  const Problem f = make_problem(Suite::fmri, 3, 0, c);
  CHECK(f.system.N() == 15);
  CHECK(f.system.P() == 9);

  RunConfig r = c;
  r.r_rule = "regions";
  CHECK(make_problem(Suite::fmri, 4, 0, r).R == 4);
  r.r_rule = "2";
  CHECK(make_problem(Suite::generic, 9, 0, r).R == 2);
}

TEST_CASE("reduction configs per method") {
  const RunConfig c = small_config();
  const auto o = reduction_config(BenchMethod::original, c, 3);
  CHECK(o.iterations == 3);
  CHECK_FALSE(o.trust_region);
  const auto t = reduction_config(BenchMethod::trust_data_only, c, 3);
  CHECK(t.trust_region);
  CHECK(t.objective == ObjectiveKind::data_only);
  CHECK(reduction_config(BenchMethod::trust_data, c, 3).objective ==
        ObjectiveKind::data_driven);
  CHECK_THROWS_AS(reduction_config(BenchMethod::full_order, c, 3), ConfigError);

  RunConfig w = c;
  w.gamma = 0.1;
  const auto d = reduction_config(BenchMethod::data_driven, w, 1);
  REQUIRE(d.weights);
  CHECK(d.weights->gamma == 0.1);
  CHECK(d.weights->alpha == doctest::Approx(1.0 / 3));
}

TEST_CASE("small suite runs every method and writes files") {
  RunConfig c = small_config();
  const auto records = run_suite(c);
  REQUIRE(records.size() == 6);
  for (const auto& r : records) {
    INFO(to_string(r.method), " ", r.message);
    CHECK(r.status == "ok");
    CHECK(std::isfinite(r.rel_err));
    CHECK(r.N == 4);
    if (r.method == BenchMethod::trust_data_only) CHECK(r.full_sims == 0);
    if (r.method == BenchMethod::full_order) CHECK(r.offline_ms == 0.0);
  }

  const fs::path dir = fs::temp_directory_path() / "spred_bench_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_results_csv((dir / "results.csv").string(), records);
  write_speedup_csv((dir / "speedup.csv").string(), records);
  write_plot_files(dir.string(), records);
  const auto res = lines_of(dir / "results.csv");
  REQUIRE(res.size() == 8);
  CHECK(res[0] == "# spred-results v1");
  CHECK(res[1].rfind("suite,model,method,size,N,", 0) == 0);
  const auto sp = lines_of(dir / "speedup.csv");
  CHECK(sp.size() == 8);
  CHECK(sp[0] == "# spred-speedup v1");
  CHECK(fs::exists(dir / "plot_offline.dat"));
  CHECK(fs::exists(dir / "plot_online.dat"));
  CHECK(fs::exists(dir / "plot_relerr.dat"));

  // Same seeds, same numbers; only timings differ.
  c.workers = 2;
  const auto again = run_suite(c);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(again[i].method == records[i].method);
    CHECK(again[i].rel_err == records[i].rel_err);
    CHECK(again[i].k == records[i].k);
    CHECK(again[i].m == records[i].m);
  }
  fs::remove_all(dir);
}

TEST_CASE("memory budget marks cells infeasible") {
  RunConfig c = small_config();
  c.sizes = {6};
  c.methods = {BenchMethod::full_order, BenchMethod::original,
               BenchMethod::trust_data_only};
  // 36 parameters need 36*36*8 = 10368 bytes; a trust search at most R+1.
  c.memory_budget = 10000;
  const auto records = run_suite(c);
  CHECK(records[0].status == "infeasible");
  CHECK(records[1].status == "infeasible");
  CHECK(records[2].status == "ok");
  CHECK(std::isnan(records[0].rel_err));
}
