#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mfgnet/config.hpp"
#include "mfgnet/run.hpp"
#include "support.hpp"

using namespace mfgnet;
namespace fs = std::filesystem;

namespace {
  const char* kDesk = R"({
    "version": 1,
    "network": {
      "vertices": [{"id": 0, "x": 0, "y": 0}, {"id": 1, "x": 1, "y": 0}],
      "edges": [{"id": 0, "tail": 0, "head": 1}],
      "exit_vertex": 0
    },
    "problem": {
      "theta": 0.5,
      "initial_mass": {"kind": "tabulated", "edges": [{"edge": 0, "values": [0, 0, 1, 0, 0]}]}
    },
    "numerics": {"h": 0.1}
  })";

  std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
  }

  std::string validation_field(const std::string& text) {
    try {
      parse_config(text);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return "";
  }

  std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("mfgnet_test_" + name);
    fs::remove_all(dir);
    return dir;
  }
}  // namespace

TEST_CASE("bundled configurations") {
  const auto ex1 = load_config(MFGNET_DATA_DIR "/example1.json");
  CHECK(ex1.vertices.size() == 4);
  CHECK(ex1.edges.size() == 4);
  CHECK(ex1.cost.t0 == 0.5);
  CHECK(ex1.cost.t_max == 10.0);
  CHECK(ex1.theta == 0.5);
  CHECK(ex1.cost.lateness_scheduled == 0.1);
  CHECK(ex1.cost.lateness_actual == 0.0);
  CHECK(ex1.cost.waiting == 0.1);
  CHECK(ex1.geometry == "approximated-from-figure");

  const auto ex2 = load_config(MFGNET_DATA_DIR "/example2.json");
  CHECK(ex2.vertices.size() == 17);
  CHECK(ex2.edges.size() == 22);
  CHECK(ex2.cost.t_max == 25.0);
  CHECK(ex2.theta == 0.7);
  REQUIRE(ex2.initial_mass.bumps.size() == 2);
  CHECK(ex2.initial_mass.bumps[0].center == Point2{1.0, 1.5});
  CHECK(ex2.initial_mass.bumps[1].center == Point2{-1.5, 3.0});
  CHECK(ex2.geometry == "approximated-from-figure");

  const auto desk = load_config(MFGNET_DATA_DIR "/desk.json");
  CHECK(desk.run.mode == RunMode::Oracle);
  CHECK(desk.run.agents == 100000);

  for (const auto* cfg : {&ex1, &ex2, &desk}) CHECK_NOTHROW(make_problem(*cfg));
}

TEST_CASE("defaults") {
  const auto c = parse_config(kDesk);
  CHECK(c.cost.t0 == 0.5);
  CHECK(c.cost.t_max == 10.0);
  CHECK(c.numerics.cfl_factor == 0.25);
  CHECK(c.numerics.tol == 1e-4);
  CHECK_FALSE(c.numerics.t_init.has_value());
  CHECK(c.numerics.max_iters == 50);
  CHECK(c.run.mode == RunMode::Solve);
  CHECK(c.run.mc_dt_ratio == 10.0);
  CHECK(c.run.h_ladder == std::vector<double>{0.1, 0.05, 0.025, 0.0125});
}

TEST_CASE("validation errors name the field") {
  CHECK(validation_field(replace(kDesk, "\"theta\": 0.5", "\"theta\": 1.2")) == "theta");
  CHECK(validation_field(replace(kDesk, "\"theta\": 0.5", "\"theta\": 0.5, \"colour\": 1")) == "colour");
  CHECK(validation_field(replace(kDesk, "\"version\": 1", "\"version\": 2")) == "version");
  CHECK(validation_field(replace(kDesk, "\"head\": 1", "\"head\": 4")) == "head");
  CHECK(validation_field(replace(kDesk, "\"exit_vertex\": 0", "\"exit_vertex\": 9")) == "exit_vertex");
  CHECK(validation_field(replace(kDesk, "\"h\": 0.1", "\"h\": -0.1")) == "h");
  CHECK(validation_field(replace(kDesk, "\"h\": 0.1", "\"h\": \"fine\"")) == "h");
  CHECK(validation_field(replace(kDesk, "\"h\": 0.1", "\"h\": 0.1, \"T_init\": 12")) == "T_init");
  CHECK(validation_field(replace(kDesk, "\"kind\": \"tabulated\"", "\"kind\": \"gaussian\"")) == "kind");
  CHECK(validation_field(replace(kDesk, "[0, 0, 1, 0, 0]", "[1]")) == "values");
  CHECK(validation_field(replace(kDesk, "\"edge\": 0,", "\"edge\": 3,")) == "edge");
  CHECK(validation_field(replace(kDesk, "\"theta\": 0.5,", "")) == "theta");

  // Connectivity and the exit degree are checked when the graph is assembled.
  const auto looped = parse_config(replace(kDesk, "\"exit_vertex\": 0", "\"exit_vertex\": 1"));
  CHECK_NOTHROW(build_network(looped));
  auto bad = parse_config(kDesk);
  bad.vertices.push_back({2, {5.0, 5.0}});
  try {
    make_problem(bad);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "network");
  }
}

TEST_CASE("parse errors carry a position") {
  try {
    parse_config("{\n  \"version\": 1,\n  \"network\": [,\n}");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() >= 14);
  }
}

TEST_CASE("emit then parse is the identity") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const char* name : {"example1", "example2", "desk"}) {
    const auto c = load_config(std::string(MFGNET_DATA_DIR "/") + name + ".json");
    CHECK(parse_config(emit_config(c)) == c);
  }
  for (int trial = 0; trial < 25; ++trial) {
    RunConfig c = parse_config(kDesk);
    c.name = "trial" + std::to_string(trial);
    c.theta = 0.01 + 0.98 * u(rng);
    c.cost.t0 = u(rng);
    c.cost.t_max = 1.0 + 20.0 * u(rng);
    c.cost.lateness_scheduled = u(rng);
    c.cost.lateness_actual = u(rng) < 0.5 ? 0.0 : u(rng);
    c.edges[0].length = 0.5 + u(rng);
    c.numerics.h = 0.01 + 0.1 * u(rng);
    c.numerics.tol = 1e-6 + u(rng) * 1e-3;
    if (u(rng) < 0.5) c.numerics.t_init = c.cost.t0 + u(rng) * (c.cost.t_max - c.cost.t0);
    c.numerics.mass_quadrature = u(rng) < 0.5 ? Quadrature::LeftRectangle : Quadrature::InteriorNodes;
    c.run.seed = rng();
    c.run.agents = 1 + rng() % 100000;
    c.run.mc_dt_ratio = 1.0 + 10.0 * u(rng);
    c.run.mode = static_cast<RunMode>(rng() % 3);
    if (u(rng) < 0.5) {
      c.initial_mass.kind = InitialMassConfig::Kind::Bumps;
      c.initial_mass.tables.clear();
      c.initial_mass.bumps = {{{u(rng), u(rng)}, 0.1 + u(rng)}};
    }
    CHECK(parse_config(emit_config(c)) == c);
  }
}

TEST_CASE("initial density selectors") {
  const auto desk = parse_config(kDesk);
  const auto g = initial_density(desk);
  CHECK(g({0, 0.5, {0.5, 0.0}}) == doctest::Approx(1.0));
  CHECK(g({0, 0.625, {0.625, 0.0}}) == doctest::Approx(0.5));
  CHECK(g({0, 0.2, {0.2, 0.0}}) == 0.0);

  auto c = desk;
  c.initial_mass.kind = InitialMassConfig::Kind::Abs;
  CHECK(initial_density(c)({0, 0.3, {0.3, 0.4}}) == doctest::Approx(0.5));

  c.initial_mass.kind = InitialMassConfig::Kind::Bumps;
  c.initial_mass.bumps = {{{1.0, 1.5}, std::sqrt(0.5)}};
  CHECK(initial_density(c)({0, 0.0, {1.0, 1.5}}) == doctest::Approx(0.5));
  CHECK(initial_density(c)({0, 0.0, {1.5, 1.5}}) == doctest::Approx(0.25));
  CHECK(initial_density(c)({0, 0.0, {0.0, 0.0}}) == 0.0);
}

TEST_CASE("solve writes deterministic artifacts") {
  auto c = parse_config(kDesk);
  c.run.output_dir = scratch("solve_a").string();
  CHECK(run(c) == ExitOk);
  const fs::path a = c.run.output_dir;
  for (const char* f : {"summary.json", "F_series.csv", "iterates.csv"}) CHECK(fs::exists(a / f));
  CHECK(slurp(a / "F_series.csv").rfind("t,F\n", 0) == 0);
  CHECK(slurp(a / "summary.json").find("\"T_star\"") != std::string::npos);

  c.run.output_dir = scratch("solve_b").string();
  CHECK(run(c) == ExitOk);
  CHECK(slurp(a / "summary.json") == slurp(fs::path(c.run.output_dir) / "summary.json"));
}

TEST_CASE("refine study writes one row per step") {
  auto c = parse_config(kDesk);
  c.run.mode = RunMode::RefineStudy;
  c.run.h_ladder = {0.1, 0.05};
  c.run.output_dir = scratch("refine").string();
  CHECK(run(c) == ExitOk);
  const auto table = slurp(fs::path(c.run.output_dir) / "refine_study.csv");
  CHECK(table.rfind("h,E_h,T,iterations,converged\n", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);
}

TEST_CASE("oracle output") {
  auto c = parse_config(kDesk);
  c.run.mode = RunMode::Oracle;
  c.run.agents = 2000;
  c.run.mc_dt_ratio = 1.0;
  c.run.output_dir = scratch("oracle").string();
  CHECK(run(c) == ExitOk);
  const fs::path dir = c.run.output_dir;
  CHECK(slurp(dir / "oracle_comparison.csv").rfind("t,F_pde,F_mc,band_lo,band_hi\n", 0) == 0);
  CHECK(slurp(dir / "mc_cdf.csv").rfind("t,F_hat,band_lo,band_hi\n", 0) == 0);
  CHECK(slurp(dir / "summary.json").find("\"sup_distance\"") != std::string::npos);
}

TEST_CASE("non-convergence is reported through the exit code") {
  auto c = parse_config(kDesk);
  c.initial_mass.kind = InitialMassConfig::Kind::Abs;
  c.numerics.max_iters = 1;
  c.run.output_dir = scratch("maxiter").string();
  CHECK(run(c) == ExitNotConverged);
}

TEST_CASE("thread count from the environment") {
  ::unsetenv("MFGNET_THREADS");
  CHECK(threads_from_environment() == 1);
  ::setenv("MFGNET_THREADS", "3", 1);
  CHECK(threads_from_environment() == 3);
  ::setenv("MFGNET_THREADS", "many", 1);
  CHECK_THROWS_AS(threads_from_environment(), ValidationError);
  ::unsetenv("MFGNET_THREADS");
}
