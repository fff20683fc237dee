#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cgl/flow.hpp"
#include "cgl/rng.hpp"
#include "cgl/spectral.hpp"

namespace cgl {

enum class DensityKind { UniformSymmetric, Triangular, TruncatedGaussian };

/// Per-coordinate kick law. All three families are bounded-variation
/// densities supported on [-scale, scale] with positive mass near 0 and all
/// moments finite. TruncatedGaussian is N(0, (scale/3)^2) cut at +-scale.
struct DensityFamily {
  DensityKind kind = DensityKind::UniformSymmetric;
  double scale = 1.0;

  double pdf(double x) const;
  double cdf(double x) const;
  double sample(CounterRng& rng) const;
  double halfwidth() const { return scale; }
  /// E xi^2 of the unit-coordinate law.
  double second_moment() const;

  static DensityFamily parse(const std::string& name, double scale);
  std::string name() const;
};

/// Law of one kick: eta = sum_j b_j xi_j g_j over the interleaved
/// H-orthonormal basis g_{2m} = alpha_{m+1}^{-1/2} e_{m+1} (real direction),
/// g_{2m+1} = i alpha_{m+1}^{-1/2} e_{m+1} (0-based coordinates).
struct KickSpec {
  std::vector<double> b;
  DensityFamily family;

  /// b_c = b0 * (c+1)^-decay for c in [0, n_coords).
  static KickSpec power_law(int n_coords, double b0, double decay, DensityFamily fam);

  int n_active() const;
  double sum_b_sq() const;
};

struct ClockSpec {
  double lambda = 1.0;
};

double sample_waiting_time(const ClockSpec& clock, CounterRng& rng);

SpectralField sample_kick(const KickSpec& spec, const GridPtr& grid, CounterRng& rng);

struct EmbeddedStep {
  SpectralField state;  // u_next = S_t(u) + eta
  double wait = 0.0;
  SpectralField kick;
};

/// One step of the embedded chain u_k = S_{t_k}(u_{k-1}) + eta_k.
EmbeddedStep embedded_step(const SpectralField& u, const KickSpec& spec,
                           const ClockSpec& clock, const FlowParams& flow,
                           ReplicaRng& rng);

struct TrajectoryLog {
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  double horizon = 0.0;
  std::vector<double> kick_times;  // tau_k, strictly increasing
  std::vector<double> waits;       // t_k with tau_k = sum of t_1..t_k
  std::vector<double> h1_at_kicks;
  std::vector<double> energy_at_kicks;
  std::vector<SpectralField> states_at_kicks;  // post-kick, kept when store_states

  struct Sample {
    double t = 0.0;
    SpectralField state;
  };
  std::vector<Sample> samples;

  bool diverged = false;
  double diverged_at = 0.0;

  /// N_t = max{k : tau_k <= t}.
  int kicks_before(double t) const;
};

struct SimulateOptions {
  bool store_states = true;
};

/// Piecewise trajectory: flow between kicks, jump by eta_k at tau_k. Dense
/// samples are reconstructed from the latest post-kick state, so each sample
/// equals S_{t - tau_{N_t}}(u_{tau_{N_t}}) by construction. A divergence
/// aborts with the partial log flagged.
TrajectoryLog simulate(const SpectralField& u0, double horizon,
                       const std::vector<double>& sample_times, const KickSpec& spec,
                       const ClockSpec& clock, const FlowParams& flow,
                       const EnergyParams& e, ReplicaRng& rng,
                       const SimulateOptions& opts = {});

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MomentReport {
  std::vector<double> mean_hp;  // per-k empirical E H(u_k)^p
  double sup = 0.0;             // running max over k
  double gamma = 0.0;           // fitted contraction factor
  double plateau = 0.0;
};

/// Empirical sup_k E H(u_k)^p from an ensemble of chains (H series of equal
/// length, >= 100 chains) and a fit of the bound shape gamma^k H0^p + const.
MomentReport moment_estimate(const std::vector<std::vector<double>>& h_chains, double p);

/// First k with ||u_k||_1 <= R, or nullopt if the chain ends first.
std::optional<int> hitting_time_tau_R(const std::vector<double>& h1_series, double R);

}  // namespace cgl
