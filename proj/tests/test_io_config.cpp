#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "fpme/config.hpp"
#include "fpme/rng.hpp"

using namespace fpme;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "fpme_io_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

nlohmann::json minimal_doc() {
  return {{"grid", {{"dim", 1}, {"L", 10.0}, {"n", 64}}}};
}

}  // namespace

TEST_CASE("field binary round trip is bit exact") {
  SplitMix64 rng(99);
  for (int dim : {1, 2}) {
    GridSpec g = make_grid(dim, 7.5, 16);
    Field f = random_field(g, rng, -3.0, 3.0);
    f.values[0] = 0.1;                                   // not exactly representable
    f.values[1] = -0.0;
    f.values[2] = std::numeric_limits<double>::denorm_min();

    const fs::path p = scratch() / ("roundtrip" + std::to_string(dim) + ".field");
    write_field(p, f);
    Field back = read_field(p);

    CHECK(back.grid == g);
    REQUIRE(back.values.size() == f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      CHECK(back.values[i] == f.values[i]);
      CHECK(std::signbit(back.values[i]) == std::signbit(f.values[i]));
    }
  }
}

TEST_CASE("field file error handling") {
  CHECK_THROWS_AS(read_field(scratch() / "missing.field"), std::runtime_error);

  GridSpec g = make_grid(1, 5.0, 32);
  Field f = make_field(g, 1.0);
  const fs::path p = scratch() / "broken.field";

  SECTION("truncated payload") {
    write_field(p, f);
    fs::resize_file(p, 24 + 8 * 10);  // header plus 10 of 32 samples
    CHECK_THROWS_AS(read_field(p), std::runtime_error);
  }

  SECTION("non finite payload is refused on read") {
    f.values[3] = std::numeric_limits<double>::quiet_NaN();
    write_field(p, f);
    CHECK_THROWS_AS(read_field(p), std::runtime_error);
  }
}

TEST_CASE("csv forms") {
  GridSpec g = make_grid(1, 5.0, 8);
  Field f = make_field(g, 2.0);
  const fs::path p1 = scratch() / "field1.csv";
  write_field_csv(p1, f);
  std::ifstream is1(p1);
  std::string header;
  std::getline(is1, header);
  CHECK(header == "x,value");
  std::size_t rows = 0;
  for (std::string line; std::getline(is1, line);) ++rows;
  CHECK(rows == 8);

  GridSpec g2 = make_grid(2, 5.0, 4);
  const fs::path p2 = scratch() / "field2.csv";
  write_field_csv(p2, make_field(g2, 1.0));
  std::ifstream is2(p2);
  std::getline(is2, header);
  CHECK(header == "x,y,value");
  rows = 0;
  for (std::string line; std::getline(is2, line);) ++rows;
  CHECK(rows == 16);

  std::vector<SeriesRow> series{{0.0, 1.0, 1.0, 0.5, 0.4, 0.3}, {0.5, 1.0, 0.9, 0.45, 0.36, 0.2}};
  const fs::path p3 = scratch() / "series.csv";
  write_series_csv(p3, series);
  std::ifstream is3(p3);
  std::getline(is3, header);
  CHECK(header == "t,mass,L1,L2,Lm+1,Linf");
  rows = 0;
  for (std::string line; std::getline(is3, line);) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("json report forms") {
  GridSpec g = make_grid(1, 10.0, 64);
  OperatorPlan op(g, BackendTag::spectral);
  Field f = sample(g, DatumSpec{"gaussian", {}});
  ResolventProblem prob{0.1, 2.0, f, &op, 1e-10, 5000};
  ResolventSolution sol = solve_resolvent(prob);

  nlohmann::json j = to_json(sol.report);
  CHECK(j.at("converged").get<bool>());
  CHECK(j.at("method").get<std::string>() == sol.report.method);
  CHECK(j.at("iterations").get<int>() == sol.report.iterations);
  CHECK(j.at("final_residual").get<double>() == sol.report.final_residual);
  CHECK(j.at("step_sizes").contains("mean"));
  CHECK(j.at("step_sizes").at("count").get<int>() == sol.report.step_sizes.count);

  DiagnosticsReport rep;
  rep.check = "demo";
  rep.margins["alpha"] = 0.25;
  rep.tolerance = 1e-3;
  rep.pass = true;
  nlohmann::json dj = to_json(rep);
  CHECK(dj.at("check").get<std::string>() == "demo");
  CHECK(dj.at("margins").at("alpha").get<double>() == 0.25);
  CHECK(dj.at("pass").get<bool>());
}

TEST_CASE("trajectory directory round trip") {
  GridSpec g = make_grid(1, 10.0, 32);
  OperatorPlan op(g, BackendTag::spectral);
  Field f = sample(g, DatumSpec{"gaussian", {}});
  EvolutionConfig cfg{1.0, 0.5, 4, &op, 1e-10, 5000, 2};
  Trajectory traj = evolve(f, cfg);

  const fs::path dir = scratch() / "traj";
  nlohmann::json echo = {{"note", "demo"}};
  write_trajectory(dir, traj, echo);

  nlohmann::json report = read_json(dir / "report.json");
  CHECK(report.at("schema_version").get<int>() == kSchemaVersion);
  CHECK(report.at("config") == echo);
  CHECK(report.at("steps").size() == 4);
  CHECK_FALSE(report.at("failed").get<bool>());
  CHECK(fs::exists(dir / "series.csv"));

  LoadedTrajectory back = read_trajectory(dir);
  REQUIRE(back.times.size() == traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    CHECK(back.times[i] == traj.times[i]);
    for (std::size_t k = 0; k < traj.snapshots[i].values.size(); ++k)
      CHECK(back.snapshots[i].values[k] == traj.snapshots[i].values[k]);
  }
  CHECK(back.config_echo == echo);

  CHECK_THROWS_AS(read_trajectory(scratch() / "no_such_dir"), std::runtime_error);
}

TEST_CASE("config defaults") {
  ExperimentConfig c = parse_config(minimal_doc());
  CHECK(c.grid.dim == 1);
  CHECK(c.grid.half_width == 10.0);
  CHECK(c.grid.points_per_dim == 64);
  CHECK(c.backend == BackendTag::spectral);
  CHECK(c.m == 1.0);
  CHECK(c.datum.name == "gaussian");
  CHECK(c.tol == 1e-9);
  CHECK(c.max_iter == 5000);
  CHECK(c.output_dir == "out");
  CHECK(c.output_binary);
  CHECK(c.output_csv);
  CHECK_FALSE(c.seed.has_value());
  CHECK_FALSE(c.has_time);
  CHECK_THROWS_AS(c.epsilon(), ConfigError);
}

TEST_CASE("config full document") {
  nlohmann::json doc = {
      {"grid", {{"dim", 2}, {"L", 15.0}, {"n", 128}}},
      {"operator", {{"backend", "riesz"}, {"correction", "none"}}},
      {"problem", {{"m", 0.4}, {"datum", "bump"}, {"params", {{"radius", 3.0}, {"amp", 0.5}}}}},
      {"time", {{"T", 2.0}, {"n_steps", 16}, {"stride", 4}}},
      {"solver", {{"tol", 1e-8}, {"max_iter", 900}}},
      {"suite", nlohmann::json::array(
                    {"mass-conservation", {{"name", "convex-decay"}, {"tolerance", 1e-5}}})},
      {"output", {{"directory", "run7"}, {"formats", nlohmann::json::array({"binary"})}}},
      {"seed", 11}};
  ExperimentConfig c = parse_config(doc);
  CHECK(c.backend == BackendTag::riesz);
  CHECK(c.op_options.riesz_correction == RieszCorrection::none);
  CHECK(c.m == 0.4);
  CHECK(c.datum.name == "bump");
  CHECK(c.datum.params.at("radius") == 3.0);
  CHECK(c.has_time);
  CHECK(c.epsilon() == Catch::Approx(0.125).epsilon(1e-15));
  CHECK(c.stride == 4);
  CHECK(c.tol == 1e-8);
  CHECK(c.max_iter == 900);
  REQUIRE(c.suite.size() == 2);
  CHECK(c.suite[0].name == "mass-conservation");
  CHECK_FALSE(c.suite[0].tolerance.has_value());
  CHECK(c.suite[1].tolerance.value() == 1e-5);
  CHECK(c.output_dir == "run7");
  CHECK(c.output_binary);
  CHECK_FALSE(c.output_csv);
  CHECK(c.seed.value() == 11);

  Field f = make_datum(c);
  CHECK(sup_norm(f) == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("single solve step size") {
  nlohmann::json doc = minimal_doc();
  doc["time"] = {{"epsilon", 0.05}};
  ExperimentConfig c = parse_config(doc);
  CHECK_FALSE(c.has_time);
  CHECK(c.epsilon() == 0.05);

  doc["time"] = {{"epsilon", 0.05}, {"T", 1.0}};
  CHECK_THROWS_AS(parse_config(doc), ConfigError);
}

TEST_CASE("unknown keys are rejected at every level") {
  auto expect_reject = [](nlohmann::json doc) {
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  };

  nlohmann::json doc = minimal_doc();
  doc["grd"] = 1;
  expect_reject(doc);

  doc = minimal_doc();
  doc["grid"]["nn"] = 4;
  expect_reject(doc);

  doc = minimal_doc();
  doc["operator"] = {{"kind", "spectral"}};
  expect_reject(doc);

  doc = minimal_doc();
  doc["problem"] = {{"m", 1.0}, {"em", 2.0}};
  expect_reject(doc);

  doc = minimal_doc();
  doc["time"] = {{"T", 1.0}, {"n_steps", 4}, {"steps", 4}};
  expect_reject(doc);

  doc = minimal_doc();
  doc["solver"] = {{"tolerance", 1e-8}};
  expect_reject(doc);

  doc = minimal_doc();
  doc["suite"] = nlohmann::json::array({{{"name", "retention"}, {"tol", 1e-5}}});
  expect_reject(doc);

  doc = minimal_doc();
  doc["output"] = {{"dir", "out"}};
  expect_reject(doc);
}

TEST_CASE("config value validation") {
  auto expect_reject = [](nlohmann::json doc) {
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  };

  expect_reject(nlohmann::json::object());  // no grid section

  nlohmann::json doc = {{"grid", {{"dim", 3}, {"L", 10.0}, {"n", 64}}}};
  expect_reject(doc);
  doc = {{"grid", {{"dim", 1}, {"L", 10.0}, {"n", 63}}}};  // odd
  expect_reject(doc);
  doc = {{"grid", {{"dim", 1}, {"L", 10.0}}}};  // missing n
  expect_reject(doc);

  doc = minimal_doc();
  doc["operator"] = {{"backend", "galerkin"}};
  expect_reject(doc);
  doc = minimal_doc();
  doc["operator"] = {{"correction", "cubic"}};
  expect_reject(doc);

  doc = minimal_doc();
  doc["problem"] = {{"m", 0.0}};
  expect_reject(doc);
  doc = minimal_doc();
  doc["problem"] = {{"m", -2.0}};
  expect_reject(doc);

  doc = minimal_doc();
  doc["time"] = {{"T", -1.0}, {"n_steps", 4}};
  expect_reject(doc);
  doc = minimal_doc();
  doc["time"] = {{"T", 1.0}, {"n_steps", 2.5}};
  expect_reject(doc);
  doc = minimal_doc();
  doc["time"] = {{"T", 1.0}, {"n_steps", 4}, {"stride", 0}};
  expect_reject(doc);

  doc = minimal_doc();
  doc["solver"] = {{"tol", 0.0}};
  expect_reject(doc);
  doc = minimal_doc();
  doc["solver"] = {{"max_iter", 0.5}};
  expect_reject(doc);
  doc = minimal_doc();
  doc["solver"] = {{"armijo_decrease", 1.5}};
  expect_reject(doc);

  doc = minimal_doc();
  doc["suite"] = nlohmann::json::array({"no-such-check"});
  expect_reject(doc);
  doc = minimal_doc();
  doc["suite"] = nlohmann::json::array({5});
  expect_reject(doc);

  doc = minimal_doc();
  doc["output"] = {{"formats", nlohmann::json::array({"hdf5"})}};
  expect_reject(doc);

  doc = minimal_doc();
  doc["seed"] = 1.5;
  expect_reject(doc);
}

TEST_CASE("randomized suite checks demand a seed") {
  nlohmann::json doc = minimal_doc();
  doc["suite"] = nlohmann::json::array({"contraction-battery"});
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc["seed"] = 7;
  ExperimentConfig c = parse_config(doc);
  CHECK(c.seed.value() == 7);

  // deterministic checks do not
  nlohmann::json doc2 = minimal_doc();
  doc2["suite"] = nlohmann::json::array({"mass-conservation"});
  CHECK_NOTHROW(parse_config(doc2));
}

TEST_CASE("effective echo is a normalization fixed point") {
  nlohmann::json doc = {
      {"grid", {{"dim", 1}, {"L", 10.0}, {"n", 64}}},
      {"problem", {{"m", 2.0}, {"datum", "gaussian"}, {"params", {{"sigma", 1.5}}}}},
      {"time", {{"T", 1.0}, {"n_steps", 8}}},
      {"suite", nlohmann::json::array({"retention"})},
      {"seed", 3}};
  ExperimentConfig c = parse_config(doc);
  nlohmann::json echo = effective_echo(c);

  CHECK(echo.at("operator").at("backend").get<std::string>() == "spectral");
  CHECK(echo.at("solver").at("tol").get<double>() == 1e-9);
  CHECK(echo.at("time").at("stride").get<int>() == 1);
  CHECK(echo.at("problem").at("params").at("sigma").get<double>() == 1.5);

  // parsing the echo and echoing again changes nothing
  ExperimentConfig c2 = parse_config(echo);
  CHECK(effective_echo(c2) == echo);
}

TEST_CASE("config file loading") {
  const fs::path good = scratch() / "good.json";
  write_json(good, minimal_doc());
  ExperimentConfig c = load_config(good);
  CHECK(c.grid.points_per_dim == 64);

  const fs::path bad = scratch() / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK_THROWS_AS(load_config(bad), ConfigError);

  CHECK_THROWS_AS(load_config(scratch() / "missing.json"), std::runtime_error);
}

TEST_CASE("config to run objects") {
  nlohmann::json doc = minimal_doc();
  doc["problem"] = {{"m", 2.0}, {"datum", "no-such-datum"}};
  ExperimentConfig c = parse_config(doc);  // datum name validated only at sampling
  CHECK_THROWS_AS(make_datum(c), ConfigError);

  ExperimentConfig c2 = parse_config(minimal_doc());
  OperatorPlan op = make_operator_plan(c2);
  CHECK(op.tag() == BackendTag::spectral);
  CHECK_THROWS_AS(make_evolution_config(c2, op), ConfigError);

  nlohmann::json doc3 = minimal_doc();
  doc3["time"] = {{"T", 1.0}, {"n_steps", 4}};
  ExperimentConfig c3 = parse_config(doc3);
  EvolutionConfig cfg = make_evolution_config(c3, op);
  CHECK(cfg.n_steps == 4);
  CHECK(cfg.epsilon() == 0.25);
  CHECK(cfg.op == &op);
}
