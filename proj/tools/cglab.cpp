// Command-line runner: seeded simulation, coupling, mixing and stationary
// experiments plus the verification suites, all driven by one JSON config.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cgl/io.hpp"
#include "cgl/stats.hpp"
#include "cgl/suites.hpp"

namespace {

cgl::RunConfig load_config(const std::string& path, std::uint64_t seed_override,
                           bool has_seed, const std::string& out_override,
                           int replicas_override) {
  cgl::RunConfig cfg;
  if (!path.empty()) cfg = cgl::parse_config(path);
  if (has_seed) cfg.experiment.seed = seed_override;
  if (!out_override.empty()) cfg.output.dir = out_override;
  if (replicas_override > 0) cfg.experiment.replicas = replicas_override;
  auto v = cgl::validate(cfg);
  if (!v.empty()) {
    std::string msg = "config invalid after overrides";
    throw cgl::ConfigError(msg, v);
  }
  return cfg;
}

int cmd_simulate(const cgl::RunConfig& cfg) {
  using namespace cgl;
  GridPtr grid = cfg.make_grid();
  FlowParams flow = cfg.make_flow();
  KickSpec spec = cfg.make_kicks();
  ClockSpec clock = cfg.make_clock();
  EnergyParams e{cfg.energy.alpha, cfg.flow.beta};
  if (cfg.energy.auto_calibrate) {
    CounterRng rng(cfg.experiment.seed);
    std::vector<SpectralField> trials;
    for (int i = 0; i < 8; ++i)
      trials.push_back(random_smooth_state(grid, rng, 0.3 * double(i + 1), 2.0));
    CalibrateOptions copts;
    copts.beta = cfg.flow.beta;
    e = calibrate_alpha(flow, trials, copts).energy;
    std::cout << "calibrated alpha = " << e.alpha << "\n";
  }
  std::vector<double> stimes = cfg.experiment.time_grid;
  if (stimes.empty())
    for (double t = 0.0; t <= cfg.experiment.horizon; t += cfg.experiment.horizon / 100.0)
      stimes.push_back(t);
  int diverged = 0;
  for (int r = 0; r < cfg.experiment.replicas; ++r) {
    ReplicaRng rng = ReplicaRng::make(cfg.experiment.seed, r);
    TrajectoryLog log = simulate(zero_field(grid), cfg.experiment.horizon, stimes, spec,
                                 clock, flow, e, rng, {false});
    log.seed = cfg.experiment.seed;
    log.replica = r;
    diverged += log.diverged;
    std::string base = cfg.output.dir + "/trajectory_r" + std::to_string(r);
    write_text(base + ".json", trajectory_events_json(log));
    write_text(base + ".csv", trajectory_dense_csv(log, e, cfg.output.dense_modes));
  }
  double div_rate = double(diverged) / double(cfg.experiment.replicas);
  std::cout << cfg.experiment.replicas << " replicas, divergence rate " << div_rate << "\n";
  return div_rate > cfg.experiment.divergence_budget ? 4 : 0;
}

int cmd_couple(const cgl::RunConfig& cfg) {
  using namespace cgl;
  GridPtr grid = cfg.make_grid();
  FlowParams flow = cfg.make_flow();
  KickSpec spec = cfg.make_kicks();
  ClockSpec clock = cfg.make_clock();
  CouplingConfig cc = cfg.make_coupling();
  cc.validate(*grid, spec);
  EnergyParams e{cfg.energy.alpha, cfg.flow.beta};
  std::vector<std::pair<EllResult, StoppingRecord>> rows(cfg.experiment.replicas);
  parallel_for(cfg.experiment.replicas, cfg.experiment.threads, [&](int r) {
    ReplicaRng rng = ReplicaRng::make(cfg.experiment.seed, r);
    SpectralField u0 = random_smooth_state(grid, rng.init, 2.0, 2.0);
    SpectralField u0p = random_smooth_state(grid, rng.init, 1.0, 2.0);
    EllResult ell = run_until_ell(u0, u0p, cc, spec, clock, flow, e, rng);
    StoppingRecord rec;
    double init6 = std::pow(h1_norm(u0), 6) + std::pow(h1_norm(u0p), 6);
    stopping_update(rec, ell.steps, init6, cc);
    rows[r] = {std::move(ell), rec};
  });
  write_text(cfg.output.dir + "/stopping_summary.csv", stopping_summary_csv(rows));
  write_text(cfg.output.dir + "/coupled_run_r0.json", coupled_run_json(rows[0].first.steps));
  int resolved = 0;
  for (const auto& [ell, rec] : rows) resolved += ell.ell.has_value();
  std::cout << resolved << "/" << rows.size() << " runs resolved ell\n";
  return 0;
}

int cmd_mix(const cgl::RunConfig& cfg) {
  using namespace cgl;
  GridPtr grid = cfg.make_grid();
  FlowParams flow = cfg.make_flow();
  KickSpec spec = cfg.make_kicks();
  ClockSpec clock = cfg.make_clock();
  EnergyParams e{cfg.energy.alpha, cfg.flow.beta};
  std::vector<double> tgrid = cfg.experiment.time_grid;
  if (tgrid.empty()) tgrid = {1, 2, 3, 5, 7, 10, 14, 19, 25, 32, 40, 50};
  MixingOptions opts;
  opts.n_replicas = cfg.experiment.replicas;
  opts.threads = cfg.experiment.threads;
  opts.seed = cfg.experiment.seed;
  MixingReport rep = mixing_curve(state_with_energy(grid, e, 10.0), zero_field(grid),
                                  tgrid, spec, clock, flow, e,
                                  default_dictionary(std::min(8, grid->n_coords())), opts);
  write_text(cfg.output.dir + "/mixing_curve.csv", mixing_curve_csv(rep));
  write_text(cfg.output.dir + "/mixing_fit.json", mixing_fit_json(rep));
  std::cout << "first time below " << rep.threshold << ": " << rep.first_below << "\n";
  return rep.valid ? 0 : 4;
}

int cmd_stationary(const cgl::RunConfig& cfg) {
  using namespace cgl;
  GridPtr grid = cfg.make_grid();
  FlowParams flow = cfg.make_flow();
  KickSpec spec = cfg.make_kicks();
  ClockSpec clock = cfg.make_clock();
  EnergyParams e{cfg.energy.alpha, cfg.flow.beta};
  StationaryOptions opts;
  opts.horizon = std::max(cfg.experiment.horizon, 10.0 * opts.burn_in);
  opts.threads = cfg.experiment.threads;
  opts.seed = cfg.experiment.seed;
  TestDictionary dict = default_dictionary(std::min(8, grid->n_coords()));
  StationaryProxy proxy =
      krylov_bogolyubov_estimate(zero_field(grid), spec, clock, flow, e, dict, opts);
  std::vector<std::pair<std::string, KhasminskiiReport>> rows;
  for (const auto& f :
       {tanh_coordinate(0), clipped_norm(1.0),
        product_functional(tanh_coordinate(0), clipped_norm(1.0))}) {
    rows.push_back({f.name, khasminskii_check(f, proxy, clock, flow, 10000,
                                              cfg.experiment.seed + 7)});
  }
  write_text(cfg.output.dir + "/khasminskii.csv", khasminskii_csv(rows));
  std::cout << "stationary proxy: " << proxy.continuous.states.size()
            << " continuous samples, " << proxy.embedded.states.size()
            << " embedded samples, halves "
            << (proxy.halves_agree ? "agree" : "DISAGREE") << "\n";
  return proxy.halves_agree ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kicked complex Ginzburg-Landau simulator and verification lab"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, suite = "all";
  std::uint64_t seed = 0;
  bool has_seed = false;
  int replicas = 0;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--replicas", replicas, "replica count override");
  auto* seed_opt = app.add_option("--seed", seed, "seed override");

  auto* sim = app.add_subcommand("simulate", "kicked trajectories to JSON/CSV");
  auto* couple = app.add_subcommand("couple", "coupled pairs until ell resolves");
  auto* mix = app.add_subcommand("mix", "dual-Lipschitz mixing curve");
  auto* stat = app.add_subcommand("stationary", "stationary proxy and cycle identity");
  auto* verify = app.add_subcommand("verify", "run verification suites");
  verify->add_option("--suite", suite, "flow|kicks|coupling|mixing|stationary|all");

  CLI11_PARSE(app, argc, argv);
  has_seed = seed_opt->count() > 0;

  try {
    cgl::RunConfig cfg = load_config(config_path, seed, has_seed, out_dir, replicas);
    if (sim->parsed()) return cmd_simulate(cfg);
    if (couple->parsed()) return cmd_couple(cfg);
    if (mix->parsed()) return cmd_mix(cfg);
    if (stat->parsed()) return cmd_stationary(cfg);
    if (verify->parsed()) return cgl::run_suite_cli(suite, cfg);
  } catch (const cgl::ConfigError& ex) {
    std::cerr << ex.what() << "\n";
    return 3;
  } catch (const cgl::DivergenceError& ex) {
    std::cerr << ex.what() << "\n";
    return 4;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
