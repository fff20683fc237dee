#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cgl/coupling.hpp"
#include "cgl/kicks.hpp"
#include "cgl/stats.hpp"

namespace cgl {

struct EmpiricalEnsemble {
  double time = 0.0;
  std::string label;
  std::uint64_t seed = 0;
  std::vector<SpectralField> states;
};

/// Test functional with a certified dual-Lipschitz bound:
/// sup_bound + lip_bound <= 1, so dictionary means give lower bounds on the
/// dual-Lipschitz distance.
struct Functional {
  std::string name;
  std::function<double(const SpectralField&)> eval;
  double sup_bound = 0.0;
  double lip_bound = 0.0;

  double norm_L() const { return sup_bound + lip_bound; }
};

struct TestDictionary {
  std::vector<Functional> fs;
};

Functional tanh_coordinate(int coord);
Functional clipped_norm(double scale);
Functional clipped_distance(const SpectralField& anchor);
Functional product_functional(const Functional& a, const Functional& b);
Functional constant_one();  // sup 1, lip 0; for exactness checks
TestDictionary default_dictionary(int n_coords);

struct LowerBoundReport {
  double value = 0.0;
  std::vector<double> per_functional;
  double ci_lo = 0.0, ci_hi = 0.0;  // bootstrap CI of the max statistic
};

/// max over the dictionary of |mean_A f - mean_B f|; a certified lower bound
/// for the dual-Lipschitz distance between the two sampled laws.
LowerBoundReport dual_lipschitz_lower_bound(const EmpiricalEnsemble& A,
                                            const EmpiricalEnsemble& B,
                                            const TestDictionary& dict,
                                            int n_boot = 1000,
                                            std::uint64_t boot_seed = 99);

struct DecayFit {
  double c = 0.0;       // rate (exp model) or exponent (power model)
  double log_pref = 0.0;
  double rss = 0.0;
  double aic = 0.0;
};

struct MixPoint {
  double t = 0.0;
  double lb = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0, se = 0.0;
};

struct MixingReport {
  std::vector<MixPoint> curve;
  DecayFit exp_fit;
  DecayFit pow_fit;
  double first_below = -1.0;  // first grid time with lb < threshold
  double threshold = 0.05;
  bool median_nonincreasing = true;
  double divergence_rate = 0.0;
  bool valid = true;  // false when replica divergence rate > 5%
};

struct MixingOptions {
  int n_replicas = 2000;
  double burn_in = 10.0;
  double threshold = 0.05;
  int threads = 0;
  std::uint64_t seed = 1;
};

/// Independent ensembles from two initial conditions, dual-Lipschitz lower
/// bound per grid time, exponential and power-law decay fits.
MixingReport mixing_curve(const SpectralField& u0_a, const SpectralField& u0_b,
                          const std::vector<double>& time_grid, const KickSpec& spec,
                          const ClockSpec& clock, const FlowParams& flow,
                          const EnergyParams& e, const TestDictionary& dict,
                          const MixingOptions& opts);

struct StationaryProxy {
  EmpiricalEnsemble continuous;  // samples of u_t at spaced times
  EmpiricalEnsemble embedded;    // post-kick states u_{tau_k}
  bool halves_agree = true;      // first vs second half within noise
  double halves_gap = 0.0;
  double halves_null95 = 0.0;
  double h_moment = 0.0;  // int H dmu estimate
};

struct StationaryOptions {
  double burn_in = 50.0;
  double horizon = 2000.0;
  double sample_dt = 0.5;
  int threads = 0;
  std::uint64_t seed = 2;
};

/// Time-averaged samples along one long trajectory past burn-in, with the
/// split-halves stationarity proxy (gap must sit below the shuffled null).
StationaryProxy krylov_bogolyubov_estimate(const SpectralField& u0, const KickSpec& spec,
                                           const ClockSpec& clock, const FlowParams& flow,
                                           const EnergyParams& e,
                                           const TestDictionary& dict,
                                           const StationaryOptions& opts);

struct KhasminskiiReport {
  double lhs = 0.0, lhs_lo = 0.0, lhs_hi = 0.0;
  double rhs = 0.0, rhs_lo = 0.0, rhs_hi = 0.0;
  double mean_tau = 0.0;
  bool overlap = false;
};

/// Cycle identity (f, mu) = E_nu int_0^{tau_1} f(u_t) dt / E_nu tau_1:
/// lhs from the continuous-time proxy, rhs from Exp(lambda) cycles restarted
/// at embedded-proxy states. CIs by moving-block bootstrap (the proxies come
/// from one long run).
KhasminskiiReport khasminskii_check(const Functional& f, const StationaryProxy& proxy,
                                    const ClockSpec& clock, const FlowParams& flow,
                                    int n_restarts, std::uint64_t seed);

struct DriftPoint {
  double h0 = 0.0;
  double norm0 = 0.0;
  double mean_F = 0.0;  // E_u F(u_n)
  double ratio = 0.0;   // E_u F(u_n) / F(u)
};

struct DriftReport {
  int n = 0;
  double R_prime = 0.0;
  double A = 0.0;
  double fitted_a = 0.0;   // max ratio over grid points with ||u|| >= R'
  double C_prime = 0.0;    // max E F over grid points with ||u|| < R'
  bool found = false;
  bool boundary_flag = false;  // A above every observed H -> F constant
  std::vector<DriftPoint> points;
};

class ProbeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DriftOptions {
  int replicas = 200;
  int threads = 0;
  std::uint64_t seed = 3;
};

/// Drift of F(u) = max(H(u), A) along the embedded chain: search the given
/// (n, R') candidates for fitted a < 1 outside B_{R'} and bounded E F inside.
DriftReport lyapunov_probe(const std::vector<SpectralField>& u0_grid,
                           const std::vector<int>& n_candidates, double A,
                           const std::vector<double>& r_prime_candidates,
                           const KickSpec& spec, const ClockSpec& clock,
                           const FlowParams& flow, const EnergyParams& e,
                           const DriftOptions& opts);

struct HittingPoint {
  double gamma = 0.0;
  double estimate = 0.0;  // E e^{gamma tau_d}
  double se = 0.0;
  bool stable = false;  // censoring-safe at this gamma
};

struct HittingReport {
  std::vector<HittingPoint> grid;
  double largest_stable_gamma = 0.0;
  double censored_fraction = 0.0;
  bool censoring_warning = false;
  LinearFit regression;  // E e^{gamma tau_d} against 1 + H(u) + H(u')
};

struct HittingOptions {
  int replicas = 200;
  int max_kicks = 2000;
  int threads = 0;
  std::uint64_t seed = 4;
};

/// Exponential moments of the B_d hitting time of the coupled chain over a
/// gamma grid, with the affine regression against 1 + H(u) + H(u').
HittingReport pair_hitting_stats(const std::vector<CoupledPair>& u0_pairs,
                                 const std::vector<double>& gamma_grid,
                                 const CouplingConfig& cfg, const KickSpec& spec,
                                 const ClockSpec& clock, const FlowParams& flow,
                                 const EnergyParams& e, const HittingOptions& opts);

}  // namespace cgl
