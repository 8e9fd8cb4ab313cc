#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "spred/io.hpp"
#include "spred/models.hpp"
#include "test_util.hpp"

using namespace spred;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "spred_io_test";
  fs::create_directories(d);
  return d / name;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, -1e-300, 12345.678, 1.0 / 3.0})
    CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("system JSON round-trip, full and affine") {
  const auto g = random_stable_system(3, 2, 1, 5);
  const auto back = system_from_json(system_to_json(g.system));
  CHECK(back.parametrization.tag() == "full");
  CHECK(back.B == g.system.B);
  CHECK(back.C == g.system.C);
  CHECK(back.parametrization.map(g.theta_true) ==
        g.system.parametrization.map(g.theta_true));

  const auto fm = fmri_assemble(2, HemodynamicParams{});
  save_system(tmp("f.json").string(), fm.system);
  const auto fb = load_system(tmp("f.json").string());
  const Vector th = Vector::LinSpaced(4, -1.0, 1.0);
  CHECK(fb.parametrization.map(th) == fm.system.parametrization.map(th));
  CHECK(fb.P() == 4);

  CHECK_THROWS_AS(system_from_json("{not json"), ParseError);
  CHECK_THROWS_AS(system_from_json(R"({"N": 2})"), ParseError);
}

TEST_CASE("projection file round-trip") {
  std::mt19937_64 g(1);
  ProjectionPair pair{testutil::random_matrix(g, 5, 2),
                      testutil::random_matrix(g, 25, 3)};
  save_projection(tmp("p.txt").string(), pair);
  const auto back = load_projection(tmp("p.txt").string());
  CHECK(back.V == pair.V);
  CHECK(back.P == pair.P);
  std::ofstream(tmp("bad.txt")) << "something else\n";
  CHECK_THROWS_AS(load_projection(tmp("bad.txt").string()), ParseError);
}

TEST_CASE("outputs CSV round-trip and malformed rows") {
  Matrix Y(3, 2);
  Y << 1, 2, 3, 4, 5, 6.5;
  const Vector t = Vector::LinSpaced(3, 0.0, 0.2);
  write_outputs_csv(tmp("y.csv").string(), t, Y);
  const auto s = read_outputs_csv(tmp("y.csv").string());
  CHECK(s.outputs == Y);
  CHECK(s.times == t);
  std::ofstream(tmp("ragged.csv")) << "t,y_1\n0,1\n0.1\n";
  CHECK_THROWS_AS(read_outputs_csv(tmp("ragged.csv").string()), ParseError);
  std::ofstream(tmp("noy.csv")) << "t,x_1\n0,1\n";
  CHECK_THROWS_AS(read_outputs_csv(tmp("noy.csv").string()), ParseError);
  fs::remove_all(tmp("").parent_path());
}
