#include "cgl/kicks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cgl {

namespace {
constexpr double kSqrt2Pi = 2.506628274631000502415765284811;

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / kSqrt2Pi; }
double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730950488); }
// Mass of N(0,1) inside [-3, 3].
const double kTrunc3Mass = 2.0 * std_normal_cdf(3.0) - 1.0;
}  // namespace

double DensityFamily::pdf(double x) const {
  double s = scale;
  switch (kind) {
    case DensityKind::UniformSymmetric:
      return (std::abs(x) <= s) ? 0.5 / s : 0.0;
    case DensityKind::Triangular:
      return (std::abs(x) <= s) ? (s - std::abs(x)) / (s * s) : 0.0;
    case DensityKind::TruncatedGaussian: {
      if (std::abs(x) > s) return 0.0;
      double sigma = s / 3.0;
      return std_normal_pdf(x / sigma) / (sigma * kTrunc3Mass);
    }
  }
  return 0.0;
}

double DensityFamily::cdf(double x) const {
  double s = scale;
  if (x <= -s) return 0.0;
  if (x >= s) return 1.0;
  switch (kind) {
    case DensityKind::UniformSymmetric:
      return 0.5 * (x / s + 1.0);
    case DensityKind::Triangular: {
      double y = x / s;
      return (y <= 0.0) ? 0.5 * (1.0 + y) * (1.0 + y) : 1.0 - 0.5 * (1.0 - y) * (1.0 - y);
    }
    case DensityKind::TruncatedGaussian: {
      double sigma = s / 3.0;
      return (std_normal_cdf(x / sigma) - std_normal_cdf(-3.0)) / kTrunc3Mass;
    }
  }
  return 0.0;
}

double DensityFamily::sample(CounterRng& rng) const {
  switch (kind) {
    case DensityKind::UniformSymmetric:
      return scale * rng.symmetric();
    case DensityKind::Triangular:
      return scale * (rng.uniform01() + rng.uniform01() - 1.0);
    case DensityKind::TruncatedGaussian: {
      double sigma = scale / 3.0;
      for (;;) {
        double z = rng.normal();
        if (std::abs(z) <= 3.0) return sigma * z;
      }
    }
  }
  return 0.0;
}

double DensityFamily::second_moment() const {
  switch (kind) {
    case DensityKind::UniformSymmetric:
      return scale * scale / 3.0;
    case DensityKind::Triangular:
      return scale * scale / 6.0;
    case DensityKind::TruncatedGaussian: {
      // E z^2 for N(0,1) truncated at +-3, scaled by sigma = scale/3.
      double sigma = scale / 3.0;
      double ez2 = 1.0 - 2.0 * 3.0 * std_normal_pdf(3.0) / kTrunc3Mass;
      return sigma * sigma * ez2;
    }
  }
  return 0.0;
}

DensityFamily DensityFamily::parse(const std::string& name, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("density scale must be positive");
  if (name == "uniform_symmetric") return {DensityKind::UniformSymmetric, scale};
  if (name == "triangular") return {DensityKind::Triangular, scale};
  if (name == "truncated_gaussian") return {DensityKind::TruncatedGaussian, scale};
  throw std::invalid_argument("unknown density family: " + name);
}

std::string DensityFamily::name() const {
  switch (kind) {
    case DensityKind::UniformSymmetric: return "uniform_symmetric";
    case DensityKind::Triangular: return "triangular";
    case DensityKind::TruncatedGaussian: return "truncated_gaussian";
  }
  return "?";
}

KickSpec KickSpec::power_law(int n_coords, double b0, double decay, DensityFamily fam) {
  if (n_coords < 0) throw std::invalid_argument("n_coords must be nonnegative");
  KickSpec s;
  s.family = fam;
  s.b.resize(n_coords);
  for (int c = 0; c < n_coords; ++c) s.b[c] = b0 * std::pow(double(c + 1), -decay);
  return s;
}

int KickSpec::n_active() const {
  for (int c = int(b.size()) - 1; c >= 0; --c)
    if (b[c] != 0.0) return c + 1;
  return 0;
}

double KickSpec::sum_b_sq() const {
  double s = 0.0;
  for (double v : b) s += v * v;
  return s;
}

double sample_waiting_time(const ClockSpec& clock, CounterRng& rng) {
  if (!(clock.lambda > 0.0)) throw std::invalid_argument("clock rate must be positive");
  return rng.exponential(clock.lambda);
}

SpectralField sample_kick(const KickSpec& spec, const GridPtr& grid, CounterRng& rng) {
  if (int(spec.b.size()) > grid->n_coords())
    throw std::invalid_argument("kick coefficients exceed grid coordinates");
  SpectralField eta(grid);
  for (int c = 0; c < int(spec.b.size()); ++c) {
    if (spec.b[c] == 0.0) continue;
    double xi = spec.family.sample(rng);
    set_basis_coordinate(eta, c, spec.b[c] * xi);
  }
  return eta;
}

EmbeddedStep embedded_step(const SpectralField& u, const KickSpec& spec,
                           const ClockSpec& clock, const FlowParams& flow,
                           ReplicaRng& rng) {
  EmbeddedStep step;
  step.wait = sample_waiting_time(clock, rng.clock);
  step.kick = sample_kick(spec, u.grid, rng.kicks);
  step.state = evolve(u, step.wait, flow) + step.kick;
  return step;
}

int TrajectoryLog::kicks_before(double t) const {
  int n = 0;
  while (n < int(kick_times.size()) && kick_times[n] <= t) ++n;
  return n;
}

TrajectoryLog simulate(const SpectralField& u0, double horizon,
                       const std::vector<double>& sample_times, const KickSpec& spec,
                       const ClockSpec& clock, const FlowParams& flow,
                       const EnergyParams& e, ReplicaRng& rng,
                       const SimulateOptions& opts) {
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");
  std::vector<double> stimes = sample_times;
  std::sort(stimes.begin(), stimes.end());
  for (double s : stimes)
    if (s < 0.0 || s > horizon)
      throw std::invalid_argument("simulate: sample time outside [0, horizon]");

  TrajectoryLog log;
  log.horizon = horizon;
  SpectralField u = u0;  // latest post-kick state (or initial state)
  double tau = 0.0;
  std::size_t next_sample = 0;
  try {
    for (;;) {
      double wait = sample_waiting_time(clock, rng.clock);
      double tau_next = tau + wait;
      // A sample falling exactly on a kick time belongs to the post-kick
      // state (N_t counts kicks with tau_k <= t), so the flow segment takes
      // samples strictly before the kick.
      bool kick_inside = tau_next <= horizon;
      double segment_end = std::min(tau_next, horizon);
      while (next_sample < stimes.size() &&
             (kick_inside ? stimes[next_sample] < segment_end
                          : stimes[next_sample] <= segment_end)) {
        double ts = stimes[next_sample];
        TrajectoryLog::Sample s;
        s.t = ts;
        s.state = evolve(u, ts - tau, flow);
        log.samples.push_back(std::move(s));
        ++next_sample;
      }
      if (tau_next > horizon) break;
      SpectralField kick = sample_kick(spec, u.grid, rng.kicks);
      u = evolve(u, wait, flow) + kick;
      tau = tau_next;
      log.kick_times.push_back(tau);
      log.waits.push_back(wait);
      log.h1_at_kicks.push_back(h1_norm(u));
      log.energy_at_kicks.push_back(energy(u, e));
      if (opts.store_states) log.states_at_kicks.push_back(u);
    }
  } catch (const DivergenceError& err) {
    log.diverged = true;
    log.diverged_at = tau + err.time;
  }
  return log;
}

MomentReport moment_estimate(const std::vector<std::vector<double>>& h_chains, double p) {
  if (p < 1.0) throw std::invalid_argument("moment_estimate: p must be >= 1");
  if (h_chains.size() < 100)
    throw InsufficientDataError("moment_estimate: need at least 100 chains");
  std::size_t len = h_chains.front().size();
  for (const auto& c : h_chains)
    if (c.size() != len) throw std::invalid_argument("moment_estimate: unequal chain lengths");
  MomentReport rep;
  rep.mean_hp.resize(len, 0.0);
  for (const auto& c : h_chains)
    for (std::size_t k = 0; k < len; ++k) rep.mean_hp[k] += std::pow(c[k], p);
  for (auto& v : rep.mean_hp) v /= double(h_chains.size());
  rep.sup = *std::max_element(rep.mean_hp.begin(), rep.mean_hp.end());

  // Fit gamma from the decay of E H^p_k toward its plateau: plateau from the
  // tail, slope from a log-linear fit over the transient.
  std::size_t tail = std::max<std::size_t>(1, len / 4);
  double plateau = 0.0;
  for (std::size_t k = len - tail; k < len; ++k) plateau += rep.mean_hp[k];
  plateau /= double(tail);
  rep.plateau = plateau;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < len; ++k) {
    double excess = rep.mean_hp[k] - plateau;
    if (excess <= plateau * 0.05) break;  // transient over
    double x = double(k), y = std::log(excess);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  if (n >= 3) {
    double slope = (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
    rep.gamma = std::exp(slope);
  } else {
    rep.gamma = 0.0;  // no measurable transient (started at or below plateau)
  }
  return rep;
}

std::optional<int> hitting_time_tau_R(const std::vector<double>& h1_series, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("hitting_time_tau_R: R must be positive");
  for (std::size_t k = 0; k < h1_series.size(); ++k)
    if (h1_series[k] <= R) return int(k);
  return std::nullopt;
}

}  // namespace cgl
