#pragma once

#include <string>
#include <vector>

#include "cgl/config.hpp"
#include "cgl/ergodicity.hpp"

namespace cgl {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  double wall_s = 0.0;
  std::vector<std::string> files;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

/// Random state with |c_j| ~ j^-spectral_decay, rescaled to the H1 target.
SpectralField random_smooth_state(const GridPtr& grid, CounterRng& rng,
                                  double h1_target, double spectral_decay = 3.0);
/// c * e_1 with H(c e_1) equal to the target (bisection on the amplitude).
SpectralField state_with_energy(const GridPtr& grid, const EnergyParams& e,
                                double h_target);
/// Random state inside the ball ||u||_1 <= radius.
SpectralField random_state_in_ball(const GridPtr& grid, CounterRng& rng, double radius);

// Acceptance suites. Physical parameters and tolerances are pinned inside;
// the config supplies seed, thread count and output directory.
SuiteReport run_flow_suite(const RunConfig& cfg);        // integrator order,
                                                         // dissipation, budget,
                                                         // smoothing
SuiteReport run_kicks_suite(const RunConfig& cfg);       // kick law, clock,
                                                         // counting identity
SuiteReport run_coupling_suite(const RunConfig& cfg);    // coupling exactness,
                                                         // squeezing, survival,
                                                         // ell tails
SuiteReport run_mixing_suite(const RunConfig& cfg);      // decay of the dual-
                                                         // Lipschitz bound
SuiteReport run_stationary_suite(const RunConfig& cfg);  // cycle identity,
                                                         // moments and drift

std::vector<SuiteReport> run_suites(const std::string& name, const RunConfig& cfg);

/// Executes the named suite(s), writes artifacts and the manifest under
/// cfg.output.dir, returns the process exit code (0 pass, 2 gate failure,
/// 4 divergence budget exceeded).
int run_suite_cli(const std::string& name, const RunConfig& cfg);

}  // namespace cgl
