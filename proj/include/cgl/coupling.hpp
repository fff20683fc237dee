#pragma once

#include <optional>
#include <vector>

#include "cgl/kicks.hpp"

namespace cgl {

class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CouplingConfig {
  int N = 8;            // coupled low modes (complex), 2N real coordinates
  int N_prime = 8;      // squeezing index, <= N
  double M = 25.0;      // Cesaro threshold for T1/T2
  double d = 0.1;       // small-ball radius for B_d
  int window = 200;     // confirmation window for declaring ell
  int max_kicks = 500;  // safety cap per run

  void validate(const Grid& grid, const KickSpec& spec) const;
};

/// Product density of the coupled low-mode block, shifted by `mean`:
/// prod_j q_j(x_j - mean_j) with q_j(y) = b_j^{-1} p(y / b_j). Coordinates
/// are the basis coordinates of H_N; dimension is x.size().
double shifted_density(const std::vector<double>& x, const std::vector<double>& mean,
                       const KickSpec& spec);

struct CouplingDraw {
  std::vector<double> v;
  std::vector<double> v_prime;
  bool coupled = false;
};

/// Exact maximal coupling of the two shifted product laws by gamma-coupling:
/// draw X from the first law, accept v' = v = X with probability min(p,q)/p,
/// otherwise resample v' from the residual of the second law. P(v != v')
/// equals the total-variation distance.
CouplingDraw maximal_coupling_sample(const std::vector<double>& mean_p,
                                     const std::vector<double>& mean_q,
                                     const KickSpec& spec, int dim, CounterRng& rng);

enum class TvMode { Quadrature, MonteCarlo };

struct TvEstimate {
  double value = 0.0;
  double err_bound = 0.0;  // quadrature: bound on the discretization error;
                           // MC: one standard error
};

/// Ground truth TV = 1 - int min(p, q) between the two shifted laws.
/// Quadrature mode (tensor midpoint grid) for dim <= 3; Monte Carlo with a
/// reported standard error for any dim.
TvEstimate tv_oracle(const std::vector<double>& mean_p, const std::vector<double>& mean_q,
                     const KickSpec& spec, int dim, TvMode mode,
                     int resolution = 512, std::uint64_t mc_seed = 7,
                     int mc_samples = 200000);

struct CoupledPair {
  SpectralField u;
  SpectralField u_prime;
  bool matched = false;  // P_N u == P_N u' (bit-for-bit)
  // Kick ledger of the most recent step, basis coordinates. High coordinates
  // are shared, so zeta[c] == zeta_prime[c] bit-for-bit there.
  std::vector<double> zeta;
  std::vector<double> zeta_prime;

  CoupledPair() = default;
  CoupledPair(SpectralField a, SpectralField b, bool m)
      : u(std::move(a)), u_prime(std::move(b)), matched(m) {}
};

struct CoupledStepLog {
  int k = 0;
  double t = 0.0;
  bool coupled = false;
  double dist_h1 = 0.0;
  double h_u = 0.0;
  double h_up = 0.0;
  double norm_u = 0.0;
  double norm_up = 0.0;
};

/// One step of the coupled chain: shared waiting time, maximal coupling of
/// the low-mode kick blocks around the flowed means, one shared high-mode
/// kick. Each marginal is distributed exactly as an embedded_step. When
/// `force_match` is set the accept/reject draw is skipped and both low
/// blocks take the same value; this conditions on the coupling event and is
/// only meant for squeezing probes.
CoupledStepLog coupled_step(CoupledPair& pair, const CouplingConfig& cfg,
                            const KickSpec& spec, const ClockSpec& clock,
                            const FlowParams& flow, const EnergyParams& e,
                            ReplicaRng& rng, bool force_match = false);

struct PairSnapshot {
  SpectralField u;
  SpectralField u_prime;
  double t = 0.0;  // waiting time leading into this state (0 for k = 0)
};

struct CoupledRun {
  std::vector<PairSnapshot> snaps;  // snaps[k] is the pair after k steps
  std::vector<CoupledStepLog> steps;
};

CoupledRun run_coupled(CoupledPair pair, int n_steps, const CouplingConfig& cfg,
                       const KickSpec& spec, const ClockSpec& clock,
                       const FlowParams& flow, const EnergyParams& e, ReplicaRng& rng,
                       bool force_match = false);

class ProbeInvalidError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SqueezeStep {
  int k = 0;
  double dist = 0.0;         // ||u_k - u'_k||_1
  double dist_high = 0.0;    // ||Q_N (u_k - u'_k)||_1
  double factor = 0.0;       // dist_k / dist_{k-1}
  double predictor = 0.0;    // alpha_{N'+1}^{-1/2} t_k^{-1/2}
  double phi = 0.0;          // ||u_{k-1}||_1^6 + ||u'_{k-1}||_1^6
};

struct SqueezeReport {
  std::vector<SqueezeStep> steps;
  double mean_log_factor = 0.0;
  double fitted_C = 0.0;       // from log factor = log C0 + log predictor + C phi
  double fitted_logC0 = 0.0;
  double max_identity_gap = 0.0;  // max relative |dist - dist_high|
};

/// Verify the squeezing mechanics on a stretch (l, k] of a coupled run with
/// matched low modes: the distance identity, the per-step factors, and the
/// fit against the spectral-gap predictor.
SqueezeReport foias_prodi_probe(const CoupledRun& run, int l, int k,
                                const CouplingConfig& cfg);

struct StoppingRecord {
  std::optional<int> T1;
  std::optional<int> T2;
  std::optional<int> T3;
  std::optional<int> sigma;
  int steps_seen = 0;
  // running Cesaro sums (state term includes index 0)
  double sum_norm6 = 0.0;
  double sum_log_t = 0.0;
};

/// Fold new steps of a pair history into the stopping-time record.
/// T1: Cesaro mean of ||u||^6 + ||u'||^6 (indices 0..k) exceeds M.
/// T2: half the absolute Cesaro mean of log t_i (i = 1..k) exceeds M.
/// T3: first low-mode mismatch. sigma = min(T1, T2, T3).
void stopping_update(StoppingRecord& rec, const std::vector<CoupledStepLog>& history,
                     double initial_norm6, const CouplingConfig& cfg);

struct EllResult {
  std::optional<int> ell;
  std::vector<int> rho;  // successive B_d anchors tried
  int cycles = 0;
  bool censored = false;  // max_kicks exhausted before ell confirmed
  int total_steps = 0;
  std::vector<CoupledStepLog> steps;
};

/// Cycle construction of the random integer ell: wait for the pair to hit
/// B_d, then monitor coupling and both Cesaro conditions from the anchor; a
/// violation restarts the cycle at the next B_d hit. An anchor that survives
/// the confirmation window is declared ell.
EllResult run_until_ell(const SpectralField& u0, const SpectralField& u0_prime,
                        const CouplingConfig& cfg, const KickSpec& spec,
                        const ClockSpec& clock, const FlowParams& flow,
                        const EnergyParams& e, ReplicaRng& rng);

struct MismatchSlopeReport {
  double slope = 0.0;      // mismatch frequency per unit flowed distance
  double intercept = 0.0;
  double d_times_slope = 0.0;
  bool under_half = false;  // d * slope < 1/2
};

/// Regress the per-step coupling-failure frequency on the flowed distance of
/// perturbed pairs; reports whether the ball radius times the fitted slope
/// stays below one half.
MismatchSlopeReport estimate_mismatch_slope(const SpectralField& base,
                                            const std::vector<double>& perturbation_sizes,
                                            int n_per_size, const CouplingConfig& cfg,
                                            const KickSpec& spec, const ClockSpec& clock,
                                            const FlowParams& flow, const EnergyParams& e,
                                            std::uint64_t seed);

/// Smallest cutoff among the candidates whose measured mean per-step
/// contraction on matched-mode runs is below 1/e, or nullopt.
std::optional<int> select_squeeze_cutoff(const GridPtr& grid, const KickSpec& spec,
                                         const ClockSpec& clock, const FlowParams& flow,
                                         const EnergyParams& e,
                                         const std::vector<int>& candidates, int n_pairs,
                                         int n_steps, std::uint64_t seed);

struct TailIndex {
  int T = 0;
  bool resolved = false;  // false when |M_K|/K > 1 at the end of the window
};

/// Smallest n with |M_k|/k <= 1 for all k >= n inside the observed window
/// (1-based k).
TailIndex martingale_tail_detector(const std::vector<double>& series);

}  // namespace cgl
