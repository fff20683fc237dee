#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cgl/config.hpp"
#include "cgl/io.hpp"
#include "cgl/suites.hpp"

using namespace cgl;

namespace {
bool has_violation(const ConfigError& err, const std::string& path) {
  for (const auto& v : err.violations)
    if (v.path == path) return true;
  return false;
}
}  // namespace

TEST_CASE("minimal config fills defaults") {
  RunConfig cfg = parse_config_text("{}");
  CHECK(cfg.grid.n_modes == 32);
  CHECK(cfg.kicks.family == "uniform_symmetric");
  CHECK(cfg.energy.auto_calibrate);
  CHECK(validate(cfg).empty());
  CHECK(cfg.make_grid()->n_phys() == 128);
}

TEST_CASE("violations carry field paths and are all collected") {
  try {
    parse_config_text(R"({"coupling": {"N": 4, "N_prime": 9}, "kicks": {"lambda": -1}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    CHECK(has_violation(err, "coupling.N_prime"));
    CHECK(has_violation(err, "kicks.lambda"));
    CHECK(err.violations.size() >= 2);
  }
}

TEST_CASE("zero kick amplitude conflicts with the coupling block") {
  try {
    parse_config_text(R"({"kicks": {"b0": 0.0}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    CHECK(has_violation(err, "kicks.b0"));
  }
}

TEST_CASE("unknown fields and wrong types are rejected") {
  CHECK_THROWS_AS(parse_config_text(R"({"grid": {"n_nodes": 16}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"grid": {"n_modes": "many"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("not json"), ConfigError);
}

TEST_CASE("explicit alpha and auto alpha both parse") {
  RunConfig a = parse_config_text(R"({"energy": {"alpha": 0.125}})");
  CHECK(!a.energy.auto_calibrate);
  CHECK(a.energy.alpha == doctest::Approx(0.125));
  RunConfig b = parse_config_text(R"({"energy": {"alpha": "auto"}})");
  CHECK(b.energy.auto_calibrate);
}

TEST_CASE("missing file is a structured error") {
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("environment overrides mirror config fields") {
  ::setenv("CGL_KICKS_B0", "0.75", 1);
  ::setenv("CGL_EXPERIMENT_SEED", "4242", 1);
  RunConfig cfg = parse_config_text("{}");
  ::unsetenv("CGL_KICKS_B0");
  ::unsetenv("CGL_EXPERIMENT_SEED");
  CHECK(cfg.kicks.b0 == doctest::Approx(0.75));
  CHECK(cfg.experiment.seed == 4242);
}

TEST_CASE("config hash is stable and canonical") {
  RunConfig a = parse_config_text("{}");
  RunConfig b = parse_config_text(R"({"grid": {"n_modes": 32}})");
  CHECK(a.hash() == b.hash());
  RunConfig c = parse_config_text(R"({"grid": {"n_modes": 64}})");
  CHECK(a.hash() != c.hash());
}

TEST_CASE("seeded outputs are byte identical") {
  RunConfig cfg = parse_config_text("{}");
  GridPtr grid = cfg.make_grid();
  FlowParams flow = cfg.make_flow();
  KickSpec spec = cfg.make_kicks();
  ClockSpec clock = cfg.make_clock();
  EnergyParams e{0.25, cfg.flow.beta};
  auto run_once = [&]() {
    ReplicaRng rng = ReplicaRng::make(cfg.experiment.seed, 0);
    TrajectoryLog log =
        simulate(zero_field(grid), 5.0, {1.0, 2.5, 4.0}, spec, clock, flow, e, rng, {false});
    return trajectory_events_json(log) + trajectory_dense_csv(log, e, 4);
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("emitter column schemas are fixed") {
  CHECK(flow_trace_csv(FlowTrace{}).rfind("time,H,enstrophy_integral,norm_h1\n", 0) == 0);
  TrajectoryLog log;
  EnergyParams e{0.25, 1.0};
  CHECK(trajectory_dense_csv(log, e, 2).rfind("t,norm_h1,H,re_c1,im_c1,re_c2,im_c2\n", 0) ==
        0);
  CHECK(stopping_summary_csv({}).rfind(
            "replica,ell,censored,cycles,T1,T2,T3,sigma,total_steps\n", 0) == 0);
  CHECK(mixing_curve_csv(MixingReport{}).rfind("t,lower_bound,ci_lo,ci_hi\n", 0) == 0);
  CHECK(drift_table_csv(DriftReport{}).rfind("H0,norm0,mean_F,ratio\n", 0) == 0);
  CHECK(khasminskii_csv({}).rfind(
            "functional,lhs,lhs_lo,lhs_hi,rhs,rhs_lo,rhs_hi,mean_tau,overlap\n", 0) == 0);
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("manifest lists suites and survives failure") {
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "cgl_manifest_test";
  std::filesystem::remove_all(dir);
  RunConfig cfg = parse_config_text("{}");
  cfg.output.dir = dir.string();
  cfg.experiment.replicas = 1;  // starves the distance estimator
  cfg.experiment.threads = 2;
  int code = run_suite_cli("mixing", cfg);
  CHECK(code == 2);
  std::ifstream in(dir / "manifest.json");
  REQUIRE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("config_hash") != std::string::npos);
  CHECK(text.find("exit_code") != std::string::npos);
  std::filesystem::remove_all(dir);
}
