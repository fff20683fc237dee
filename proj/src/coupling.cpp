#include "cgl/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "cgl/stats.hpp"

namespace cgl {

void CouplingConfig::validate(const Grid& grid, const KickSpec& spec) const {
  if (N_prime < 1 || N_prime > N || N >= grid.n_modes())
    throw ConfigurationError("coupling: need 1 <= N' <= N < n_modes");
  if (!(M > 0.0)) throw ConfigurationError("coupling: M must be positive");
  if (!(d > 0.0 && d <= 1.0)) throw ConfigurationError("coupling: d must be in (0, 1]");
  if (int(spec.b.size()) < 2 * N)
    throw ConfigurationError("coupling: kick law shorter than coupled block");
  for (int c = 0; c < 2 * N; ++c)
    if (spec.b[c] == 0.0)
      throw ConfigurationError("coupling: b_j must be nonzero on all coupled coordinates");
}

static double coord_density(const KickSpec& spec, int c, double y) {
  double b = spec.b[c];
  return spec.family.pdf(y / b) / b;
}

double shifted_density(const std::vector<double>& x, const std::vector<double>& mean,
                       const KickSpec& spec) {
  if (x.size() != mean.size()) throw std::invalid_argument("shifted_density: size mismatch");
  if (x.size() > spec.b.size())
    throw std::invalid_argument("shifted_density: more coordinates than kick law");
  double p = 1.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (spec.b[c] == 0.0)
      throw ConfigurationError("shifted_density: b_j = 0 on a coupled coordinate");
    p *= coord_density(spec, int(c), x[c] - mean[c]);
    if (p == 0.0) return 0.0;
  }
  return p;
}

static std::vector<double> draw_block(const std::vector<double>& mean, const KickSpec& spec,
                                      int dim, CounterRng& rng) {
  std::vector<double> x(dim);
  for (int c = 0; c < dim; ++c) x[c] = mean[c] + spec.b[c] * spec.family.sample(rng);
  return x;
}

CouplingDraw maximal_coupling_sample(const std::vector<double>& mean_p,
                                     const std::vector<double>& mean_q,
                                     const KickSpec& spec, int dim, CounterRng& rng) {
  if (int(mean_p.size()) < dim || int(mean_q.size()) < dim)
    throw std::invalid_argument("maximal_coupling_sample: means shorter than dim");
  for (int c = 0; c < dim; ++c)
    if (spec.b[c] == 0.0)
      throw ConfigurationError("maximal_coupling_sample: b_j = 0 on a coupled coordinate");

  CouplingDraw draw;
  std::vector<double> mp(mean_p.begin(), mean_p.begin() + dim);
  std::vector<double> mq(mean_q.begin(), mean_q.begin() + dim);
  std::vector<double> x = draw_block(mp, spec, dim, rng);
  double px = shifted_density(x, mp, spec);
  double qx = shifted_density(x, mq, spec);
  if (rng.uniform01() * px <= qx) {
    draw.v = x;
    draw.v_prime = x;
    draw.coupled = true;
    return draw;
  }
  draw.v = std::move(x);
  draw.coupled = false;
  constexpr long kMaxIters = 1000000;
  for (long it = 0; it < kMaxIters; ++it) {
    std::vector<double> y = draw_block(mq, spec, dim, rng);
    double qy = shifted_density(y, mq, spec);
    double py = shifted_density(y, mp, spec);
    if (rng.uniform01() * qy > py) {
      draw.v_prime = std::move(y);
      return draw;
    }
  }
  throw DegeneracyError("maximal_coupling_sample: residual rejection loop exceeded 1e6");
}

TvEstimate tv_oracle(const std::vector<double>& mean_p, const std::vector<double>& mean_q,
                     const KickSpec& spec, int dim, TvMode mode, int resolution,
                     std::uint64_t mc_seed, int mc_samples) {
  if (int(mean_p.size()) < dim || int(mean_q.size()) < dim)
    throw std::invalid_argument("tv_oracle: means shorter than dim");
  std::vector<double> mp(mean_p.begin(), mean_p.begin() + dim);
  std::vector<double> mq(mean_q.begin(), mean_q.begin() + dim);
  TvEstimate est;
  if (mode == TvMode::Quadrature) {
    if (dim > 3) throw std::invalid_argument("tv_oracle: quadrature mode needs dim <= 3");
    // Tensor midpoint grid over the union of the two supports. The
    // discretization error is estimated by comparing against the half
    // resolution (the midpoint error for these piecewise-smooth densities is
    // at worst first order, so the difference bounds it up to a factor 2).
    auto tv_at = [&](int res) {
      std::vector<double> lo(dim), h(dim);
      for (int c = 0; c < dim; ++c) {
        double w = spec.b[c] * spec.family.halfwidth();
        double hi_c = std::max(mp[c], mq[c]) + w;
        lo[c] = std::min(mp[c], mq[c]) - w;
        h[c] = (hi_c - lo[c]) / double(res);
      }
      long total = 1;
      for (int c = 0; c < dim; ++c) total *= res;
      double overlap = 0.0;
      std::vector<double> x(dim);
      for (long idx = 0; idx < total; ++idx) {
        long r = idx;
        double cell = 1.0;
        for (int c = 0; c < dim; ++c) {
          int i = int(r % res);
          r /= res;
          x[c] = lo[c] + (double(i) + 0.5) * h[c];
          cell *= h[c];
        }
        double p = shifted_density(x, mp, spec);
        double q = shifted_density(x, mq, spec);
        overlap += std::min(p, q) * cell;
      }
      return std::max(0.0, 1.0 - overlap);
    };
    double fine = tv_at(resolution);
    double coarse = tv_at(std::max(2, resolution / 2));
    est.value = fine;
    // Density jumps at the support edges defeat the Richardson estimate
    // (their cell-fraction errors can coincide across resolutions), so they
    // get an explicit first-order term: four edge planes per coordinate,
    // each misassigning at most one cell width of mass.
    double edge = spec.family.pdf(spec.family.halfwidth() * (1.0 - 1e-12));
    double edge_term = 0.0;
    for (int c = 0; c < dim; ++c) {
      double w = spec.b[c] * spec.family.halfwidth();
      double span = std::abs(mp[c] - mq[c]) + 2.0 * w;
      double h = span / double(resolution);
      edge_term += 4.0 * h * edge / spec.b[c];
    }
    est.err_bound = 2.0 * std::abs(fine - coarse) + edge_term + 1e-9;
    return est;
  }
  CounterRng rng(mc_seed);
  std::vector<double> vals(mc_samples);
  for (int i = 0; i < mc_samples; ++i) {
    std::vector<double> x = draw_block(mp, spec, dim, rng);
    double p = shifted_density(x, mp, spec);
    double q = shifted_density(x, mq, spec);
    vals[i] = std::max(0.0, 1.0 - q / p);
  }
  est.value = mean(vals);
  est.err_bound = std_error(vals);
  return est;
}

CoupledStepLog coupled_step(CoupledPair& pair, const CouplingConfig& cfg,
                            const KickSpec& spec, const ClockSpec& clock,
                            const FlowParams& flow, const EnergyParams& e,
                            ReplicaRng& rng, bool force_match) {
  const GridPtr grid = pair.u.grid;
  cfg.validate(*grid, spec);
  const int dim = 2 * cfg.N;

  CoupledStepLog log;
  log.t = sample_waiting_time(clock, rng.clock);
  SpectralField su = evolve(pair.u, log.t, flow);
  SpectralField sup = evolve(pair.u_prime, log.t, flow);

  std::vector<double> mp(dim), mq(dim);
  for (int c = 0; c < dim; ++c) {
    mp[c] = basis_coordinate(su, c);
    mq[c] = basis_coordinate(sup, c);
  }

  CouplingDraw draw;
  if (force_match) {
    draw.v = draw_block(mp, spec, dim, rng.coupling);
    draw.v_prime = draw.v;
    draw.coupled = true;
  } else {
    draw = maximal_coupling_sample(mp, mq, spec, dim, rng.coupling);
  }

  // Low block takes the coupled values directly (bit-for-bit equality on
  // success); high coordinates receive one shared kick.
  pair.zeta.assign(grid->n_coords(), 0.0);
  pair.zeta_prime.assign(grid->n_coords(), 0.0);
  for (int c = 0; c < dim; ++c) {
    pair.zeta[c] = draw.v[c] - mp[c];
    pair.zeta_prime[c] = draw.v_prime[c] - mq[c];
    set_basis_coordinate(su, c, draw.v[c]);
    set_basis_coordinate(sup, c, draw.v_prime[c]);
  }
  for (int c = dim; c < std::min<int>(int(spec.b.size()), grid->n_coords()); ++c) {
    if (spec.b[c] == 0.0) continue;
    double kick = spec.b[c] * spec.family.sample(rng.kicks);
    pair.zeta[c] = kick;
    pair.zeta_prime[c] = kick;
    add_basis_coordinate(su, c, kick);
    add_basis_coordinate(sup, c, kick);
  }

  pair.u = std::move(su);
  pair.u_prime = std::move(sup);
  pair.matched = draw.coupled;

  log.coupled = draw.coupled;
  log.dist_h1 = dist_h1(pair.u, pair.u_prime);
  log.h_u = energy(pair.u, e);
  log.h_up = energy(pair.u_prime, e);
  log.norm_u = h1_norm(pair.u);
  log.norm_up = h1_norm(pair.u_prime);
  return log;
}

CoupledRun run_coupled(CoupledPair pair, int n_steps, const CouplingConfig& cfg,
                       const KickSpec& spec, const ClockSpec& clock,
                       const FlowParams& flow, const EnergyParams& e, ReplicaRng& rng,
                       bool force_match) {
  CoupledRun run;
  run.snaps.push_back({pair.u, pair.u_prime, 0.0});
  for (int k = 1; k <= n_steps; ++k) {
    CoupledStepLog log = coupled_step(pair, cfg, spec, clock, flow, e, rng, force_match);
    log.k = k;
    run.steps.push_back(log);
    run.snaps.push_back({pair.u, pair.u_prime, log.t});
  }
  return run;
}

SqueezeReport foias_prodi_probe(const CoupledRun& run, int l, int k,
                                const CouplingConfig& cfg) {
  if (l < 0 || k <= l || k >= int(run.snaps.size()))
    throw std::invalid_argument("foias_prodi_probe: bad interval");
  const GridPtr grid = run.snaps[0].u.grid;
  // Precondition: matched low modes on (l, k].
  for (int i = l + 1; i <= k; ++i) {
    const auto& s = run.snaps[i];
    for (int m = 0; m < cfg.N; ++m)
      if (s.u.coeffs[m] != s.u_prime.coeffs[m])
        throw ProbeInvalidError("foias_prodi_probe: low modes not matched on (l, k]");
  }
  SqueezeReport rep;
  double alpha_np1 = grid->eigenvalue(cfg.N_prime + 1);
  double prev = dist_h1(run.snaps[l].u, run.snaps[l].u_prime);
  std::vector<double> xs, ys;
  for (int i = l + 1; i <= k; ++i) {
    const auto& s = run.snaps[i];
    SqueezeStep st;
    st.k = i;
    st.dist = dist_h1(s.u, s.u_prime);
    st.dist_high = dist_h1(project_high(s.u, cfg.N), project_high(s.u_prime, cfg.N));
    if (st.dist > 0.0)
      rep.max_identity_gap =
          std::max(rep.max_identity_gap, std::abs(st.dist - st.dist_high) / st.dist);
    st.predictor = (s.t > 0.0) ? 1.0 / std::sqrt(alpha_np1 * s.t) : 0.0;
    const auto& prev_snap = run.snaps[i - 1];
    st.phi = std::pow(h1_norm(prev_snap.u), 6) + std::pow(h1_norm(prev_snap.u_prime), 6);
    st.factor = (prev > 0.0) ? st.dist / prev : 0.0;
    // Steps where the distance has collapsed to the roundoff floor measure
    // noise, not squeezing; keep them out of the averages.
    if (st.factor > 0.0 && st.predictor > 0.0 && prev > 1e-12) {
      xs.push_back(st.phi);
      ys.push_back(std::log(st.factor) - std::log(st.predictor));
      rep.mean_log_factor += std::log(st.factor);
    }
    rep.steps.push_back(st);
    prev = st.dist;
  }
  if (!xs.empty()) rep.mean_log_factor /= double(xs.size());
  if (xs.size() >= 2) {
    LinearFit fit = linear_fit(xs, ys);
    rep.fitted_C = fit.slope;
    rep.fitted_logC0 = fit.intercept;
  }
  return rep;
}

void stopping_update(StoppingRecord& rec, const std::vector<CoupledStepLog>& history,
                     double initial_norm6, const CouplingConfig& cfg) {
  if (rec.steps_seen == 0) rec.sum_norm6 = initial_norm6;
  for (int k = rec.steps_seen; k < int(history.size()); ++k) {
    const auto& step = history[k];
    int idx = k + 1;  // 1-based step index
    rec.sum_norm6 += std::pow(step.norm_u, 6) + std::pow(step.norm_up, 6);
    rec.sum_log_t += std::log(step.t);
    double cesaro_state = rec.sum_norm6 / double(idx + 1);
    double cesaro_logt = 0.5 * std::abs(rec.sum_log_t) / double(idx);
    if (!rec.T1 && cesaro_state > cfg.M) rec.T1 = idx;
    if (!rec.T2 && cesaro_logt > cfg.M) rec.T2 = idx;
    if (!rec.T3 && !step.coupled) rec.T3 = idx;
    rec.steps_seen = idx;
  }
  rec.sigma = std::nullopt;
  for (const auto& t : {rec.T1, rec.T2, rec.T3})
    if (t && (!rec.sigma || *t < *rec.sigma)) rec.sigma = *t;
}

EllResult run_until_ell(const SpectralField& u0, const SpectralField& u0_prime,
                        const CouplingConfig& cfg, const KickSpec& spec,
                        const ClockSpec& clock, const FlowParams& flow,
                        const EnergyParams& e, ReplicaRng& rng) {
  EllResult res;
  CoupledPair pair{u0, u0_prime, false};

  auto in_ball = [&](double nu, double nup) { return std::max(nu, nup) <= cfg.d; };

  // Anchor state: -1 means waiting for a B_d hit.
  int anchor = -1;
  double anchor_sum_norm6 = 0.0;
  double anchor_sum_logt = 0.0;
  double nu = h1_norm(pair.u), nup = h1_norm(pair.u_prime);
  if (in_ball(nu, nup)) {
    anchor = 0;
    anchor_sum_norm6 = std::pow(nu, 6) + std::pow(nup, 6);
    res.rho.push_back(0);
    res.cycles = 1;
  }

  for (int k = 1; k <= cfg.max_kicks; ++k) {
    CoupledStepLog log = coupled_step(pair, cfg, spec, clock, flow, e, rng);
    log.k = k;
    res.steps.push_back(log);
    res.total_steps = k;

    bool ball = in_ball(log.norm_u, log.norm_up);
    if (anchor < 0) {
      if (ball) {
        anchor = k;
        anchor_sum_norm6 = std::pow(log.norm_u, 6) + std::pow(log.norm_up, 6);
        anchor_sum_logt = 0.0;
        res.rho.push_back(k);
        ++res.cycles;
      }
      continue;
    }

    // Monitoring from the anchor: coupling plus both Cesaro conditions.
    anchor_sum_norm6 += std::pow(log.norm_u, 6) + std::pow(log.norm_up, 6);
    anchor_sum_logt += std::log(log.t);
    int span = k - anchor;
    double cesaro_state = anchor_sum_norm6 / double(span + 1);
    double cesaro_logt = 0.5 * std::abs(anchor_sum_logt) / double(span);
    bool violated = !log.coupled || cesaro_state > cfg.M || cesaro_logt > cfg.M;
    if (violated) {
      // Hit-first tie break: a B_d hit at the violating step anchors the
      // next cycle immediately.
      if (ball) {
        anchor = k;
        anchor_sum_norm6 = std::pow(log.norm_u, 6) + std::pow(log.norm_up, 6);
        anchor_sum_logt = 0.0;
        res.rho.push_back(k);
        ++res.cycles;
      } else {
        anchor = -1;
      }
      continue;
    }
    if (span >= cfg.window) {
      res.ell = anchor;
      return res;
    }
  }
  res.censored = true;
  return res;
}

MismatchSlopeReport estimate_mismatch_slope(const SpectralField& base,
                                            const std::vector<double>& perturbation_sizes,
                                            int n_per_size, const CouplingConfig& cfg,
                                            const KickSpec& spec, const ClockSpec& clock,
                                            const FlowParams& flow, const EnergyParams& e,
                                            std::uint64_t seed) {
  std::vector<double> dists, freqs;
  for (std::size_t si = 0; si < perturbation_sizes.size(); ++si) {
    double size = perturbation_sizes[si];
    CounterRng mk = CounterRng(seed).derive(si + 1);
    SpectralField pert(base.grid);
    for (int j = 0; j < base.grid->n_modes(); ++j) {
      double w = std::pow(double(j + 1), -2.0);
      pert.coeffs[j] = Complex(mk.symmetric() * w, mk.symmetric() * w);
    }
    pert = (size / h1_norm(pert)) * pert;
    SpectralField up = base + pert;
    int fails = 0;
    double mean_dist = 0.0;
    for (int i = 0; i < n_per_size; ++i) {
      CoupledPair pair{base, up, false};
      ReplicaRng rng = ReplicaRng::make(seed, si * 1000003 + i);
      CoupledStepLog log = coupled_step(pair, cfg, spec, clock, flow, e, rng);
      fails += log.coupled ? 0 : 1;
      mean_dist += dist_h1(evolve(base, log.t, flow), evolve(up, log.t, flow));
    }
    dists.push_back(mean_dist / double(n_per_size));
    freqs.push_back(double(fails) / double(n_per_size));
  }
  LinearFit fit = linear_fit(dists, freqs);
  MismatchSlopeReport rep;
  rep.slope = fit.slope;
  rep.intercept = fit.intercept;
  rep.d_times_slope = cfg.d * fit.slope;
  rep.under_half = rep.d_times_slope < 0.5;
  return rep;
}

std::optional<int> select_squeeze_cutoff(const GridPtr& grid, const KickSpec& spec,
                                         const ClockSpec& clock, const FlowParams& flow,
                                         const EnergyParams& e,
                                         const std::vector<int>& candidates, int n_pairs,
                                         int n_steps, std::uint64_t seed) {
  for (int cand : candidates) {
    CouplingConfig cc;
    cc.N = cand;
    cc.N_prime = cand;
    cc.M = 1e300;
    cc.d = 1.0;
    double acc = 0.0;
    int cnt = 0;
    for (int pi = 0; pi < n_pairs; ++pi) {
      ReplicaRng rng = ReplicaRng::make(seed, std::uint64_t(cand) * 1000 + pi);
      SpectralField u(grid), pert(grid);
      for (int j = 0; j < grid->n_modes(); ++j) {
        double w = std::pow(double(j + 1), -2.0);
        u.coeffs[j] = Complex(rng.init.symmetric() * w, rng.init.symmetric() * w);
        pert.coeffs[j] = Complex(rng.init.symmetric() * w, rng.init.symmetric() * w);
      }
      u = (1.0 / h1_norm(u)) * u;
      CoupledPair pair{u, u + (0.5 / h1_norm(pert)) * pert, false};
      CoupledRun run = run_coupled(pair, n_steps, cc, spec, clock, flow, e, rng, true);
      SqueezeReport sq = foias_prodi_probe(run, 1, n_steps, cc);
      acc += sq.mean_log_factor;
      ++cnt;
    }
    if (cnt > 0 && acc / double(cnt) < -1.0) return cand;
  }
  return std::nullopt;
}

TailIndex martingale_tail_detector(const std::vector<double>& series) {
  TailIndex out;
  int n = int(series.size());
  int last_violation = 0;  // 1-based; 0 when none
  for (int k = 1; k <= n; ++k)
    if (std::abs(series[k - 1]) / double(k) > 1.0) last_violation = k;
  if (last_violation == n && n > 0) {
    out.T = n + 1;
    out.resolved = false;
    return out;
  }
  out.T = last_violation + 1;
  out.resolved = true;
  return out;
}

}  // namespace cgl
