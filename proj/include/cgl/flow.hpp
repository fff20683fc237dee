#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cgl/spectral.hpp"

namespace cgl {

/// Thrown when a trajectory leaves the sane region (guards NaN propagation).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double t, double norm)
      : std::runtime_error("flow diverged at t=" + std::to_string(t) +
                           " (h1 norm " + std::to_string(norm) + ")"),
        time(t) {}
  double time;
};

struct FlowParams {
  double nu = 1.0;
  double beta = 1.0;
  double dt_max = 1e-2;
  double blowup_h1 = 1e6;

  int substeps(double t) const;
};

/// Exact flow of u' = nu Lap u over time t (diagonal in the eigenbasis).
SpectralField heat_substep(const SpectralField& u, double t, const FlowParams& p);

/// Exact flow of u' = -i beta |u|^2 u over time t: pointwise phase rotation
/// on the padded physical grid, then truncation back to n_modes.
SpectralField phase_substep(const SpectralField& u, double t, const FlowParams& p);

/// The resolving semigroup S_t by Strang splitting, both sub-flows exact.
SpectralField evolve(const SpectralField& u, double t, const FlowParams& p);

/// Linearization of evolve along the trajectory of u: evolves a perturbation
/// delta with the tangent of each substep. Used as an oracle for the
/// small-difference limit of lipschitz_probe.
SpectralField tangent_evolve(const SpectralField& u, const SpectralField& delta,
                             double t, const FlowParams& p);

/// Per-substep diagnostics along one evolve call. The enstrophy integral
/// int_0^t ||Lap u||^2 ds is accumulated with the per-mode closed form on
/// each heat half-step, which captures the stiff initial transient exactly.
struct FlowTrace {
  std::vector<double> time;
  std::vector<double> energy;
  std::vector<double> enstrophy_integral;
  std::vector<double> norm_h1;
};

SpectralField evolve_traced(const SpectralField& u, double t, const FlowParams& p,
                            const EnergyParams& e, FlowTrace& trace);

struct Calibration {
  EnergyParams energy;
  double decay_rate = 0.0;  // fitted a, with safety margin applied
  int halvings = 0;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrateOptions {
  double alpha0 = 0.25;
  double alpha_min = 1e-6;
  double beta = 1.0;
  double horizon = 6.0;
  int n_samples = 48;
  double margin = 0.97;
};

/// Halve alpha from alpha0 until log H(S_t u) decays monotonically with
/// positive rate on every trial state; returns the accepted alpha and the
/// fitted decay rate (min observed average rate times the safety margin).
Calibration calibrate_alpha(const FlowParams& p,
                            const std::vector<SpectralField>& trial_states,
                            const CalibrateOptions& opts = {});

struct BudgetReport {
  double lhs = 0.0;  // alpha nu int_0^t ||Lap u||^2 ds
  double rhs = 0.0;  // H(u0)
  bool ok(double tol) const { return lhs <= rhs * (1.0 + tol) + 1e-300; }
};

BudgetReport enstrophy_budget_check(const SpectralField& u0, double t,
                                    const FlowParams& p, const EnergyParams& e);

/// sqrt(t) ||S_t u - S_t v||_2 / ||u - v||_1 for each t in t_list.
std::vector<double> smoothing_probe(const SpectralField& u, const SpectralField& v,
                                    const std::vector<double>& t_list,
                                    const FlowParams& p);

/// ||S_t u - S_t v||_1 / ||u - v||_1.
double lipschitz_probe(const SpectralField& u, const SpectralField& v, double t,
                       const FlowParams& p);

}  // namespace cgl
