#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "cgl/io.hpp"
#include "cgl/kicks.hpp"
#include "cgl/stats.hpp"

using namespace cgl;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

GridPtr small_grid() { return Grid::make(kPi, 16, 32); }

KickSpec default_spec(const GridPtr& grid) {
  return KickSpec::power_law(grid->n_coords(), 0.5, 1.0,
                             DensityFamily::parse("uniform_symmetric", 1.0));
}
}  // namespace

TEST_CASE("density families") {
  for (const char* name : {"uniform_symmetric", "triangular", "truncated_gaussian"}) {
    CAPTURE(name);
    DensityFamily fam = DensityFamily::parse(name, 1.3);
    // pdf integrates to one (Simpson over the support).
    const int n = 20000;
    double h = 2.0 * fam.halfwidth() / n;
    double integral = fam.pdf(-fam.halfwidth()) + fam.pdf(fam.halfwidth());
    for (int i = 1; i < n; ++i)
      integral += fam.pdf(-fam.halfwidth() + i * h) * (i % 2 ? 4.0 : 2.0);
    integral *= h / 3.0;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fam.cdf(-fam.halfwidth()) == 0.0);
    CHECK(fam.cdf(fam.halfwidth()) == 1.0);
    CHECK(fam.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    // cdf slope vs pdf at a spot check.
    double x = 0.31, dd = 1e-6;
    CHECK((fam.cdf(x + dd) - fam.cdf(x - dd)) / (2 * dd) ==
          doctest::Approx(fam.pdf(x)).epsilon(1e-4));
    // Sample moments and support.
    CounterRng rng(41);
    const int ns = 200000;
    std::vector<double> xs(ns);
    for (int i = 0; i < ns; ++i) {
      xs[i] = fam.sample(rng);
      REQUIRE(std::abs(xs[i]) <= fam.halfwidth());
    }
    CHECK(std::abs(mean(xs)) <= 3.0 * std_error(xs));
    std::vector<double> sq(ns);
    for (int i = 0; i < ns; ++i) sq[i] = xs[i] * xs[i];
    CHECK(std::abs(mean(sq) - fam.second_moment()) <= 3.0 * std_error(sq));
    // Distribution matches the cdf.
    double d = ks_statistic(xs, [&](double y) { return fam.cdf(y); });
    CHECK(d <= ks_critical(ns, 0.01));
  }
  CHECK_THROWS_AS(DensityFamily::parse("cauchy", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(DensityFamily::parse("triangular", 0.0), std::invalid_argument);
}

TEST_CASE("sample_kick") {
  auto grid = small_grid();

  SUBCASE("all-zero coefficients give the zero field") {
    KickSpec spec = KickSpec::power_law(grid->n_coords(), 0.0, 1.0,
                                        DensityFamily::parse("uniform_symmetric", 1.0));
    CounterRng rng(42);
    CHECK(h1_norm(sample_kick(spec, grid, rng)) == 0.0);
  }

  SUBCASE("single coordinate law") {
    KickSpec spec;
    spec.family = DensityFamily::parse("uniform_symmetric", 1.0);
    spec.b = {1.0};
    CHECK(spec.n_active() == 1);
    CounterRng rng(43);
    const int n = 20000;
    std::vector<double> h1sq(n);
    for (int i = 0; i < n; ++i) {
      SpectralField eta = sample_kick(spec, grid, rng);
      h1sq[i] = h1_norm_sq(eta);
      REQUIRE(std::sqrt(h1sq[i]) <= 1.0 + 1e-12);
      // Only the first mode's real direction is excited.
      for (int c = 1; c < grid->n_coords(); ++c)
        REQUIRE(basis_coordinate(eta, c) == 0.0);
    }
    CHECK(std::abs(mean(h1sq) - 1.0 / 3.0) <= 3.0 * std_error(h1sq));
  }

  SUBCASE("norm identity sum b^2 xi^2") {
    KickSpec spec = default_spec(grid);
    CounterRng rng(44);
    SpectralField eta = sample_kick(spec, grid, rng);
    double sum = 0.0;
    for (int c = 0; c < grid->n_coords(); ++c) {
      double v = basis_coordinate(eta, c);
      sum += v * v;
      REQUIRE(std::abs(v) <= spec.b[c] * spec.family.halfwidth() + 1e-12);
    }
    CHECK(h1_norm_sq(eta) == doctest::Approx(sum).epsilon(1e-12));
    CHECK(spec.sum_b_sq() < 0.26 * 2.0);  // finite noise budget
  }

  SUBCASE("coordinate histogram matches the law") {
    KickSpec spec = default_spec(grid);
    CounterRng rng(45);
    const int n = 100000;
    std::vector<double> c0(n), c5(n);
    for (int i = 0; i < n; ++i) {
      SpectralField eta = sample_kick(spec, grid, rng);
      c0[i] = basis_coordinate(eta, 0);
      c5[i] = basis_coordinate(eta, 5);
    }
    DensityFamily fam = spec.family;
    double d0 = ks_statistic(c0, [&](double y) { return fam.cdf(y / spec.b[0]); });
    double d5 = ks_statistic(c5, [&](double y) { return fam.cdf(y / spec.b[5]); });
    CHECK(d0 <= ks_critical(n, 0.01));
    CHECK(d5 <= ks_critical(n, 0.01));
  }
}

TEST_CASE("waiting times") {
  ClockSpec clock{1.0};
  CounterRng rng(46);
  const int n = 100000;
  std::vector<double> ts(n);
  double tmin = 1e300;
  for (int i = 0; i < n; ++i) {
    ts[i] = sample_waiting_time(clock, rng);
    tmin = std::min(tmin, ts[i]);
  }
  CHECK(tmin > 0.0);
  CHECK(std::abs(mean(ts) - 1.0) <= 0.01);

  ClockSpec fast{2.0};
  int above = 0;
  for (int i = 0; i < n; ++i)
    if (sample_waiting_time(fast, rng) > 1.0) ++above;
  double frac = double(above) / n;
  double target = std::exp(-2.0);
  CHECK(std::abs(frac - target) <= 3.0 * std::sqrt(target * (1 - target) / n));

  CHECK_THROWS_AS(sample_waiting_time(ClockSpec{0.0}, rng), std::invalid_argument);
}

TEST_CASE("embedded step") {
  auto grid = small_grid();
  FlowParams flow;
  flow.nu = 1.0;
  flow.beta = 1.0;
  flow.dt_max = 0.05;
  ClockSpec clock{1.0};
  KickSpec spec = default_spec(grid);

  SUBCASE("huge viscosity crushes the state onto the kick") {
    FlowParams crush = flow;
    crush.nu = 1000.0;
    SpectralField u = mode_field(grid, 1, {0.5, 0.5});
    for (int i = 0; i < 10; ++i) {
      ReplicaRng rng = ReplicaRng::make(47, i);
      EmbeddedStep step = embedded_step(u, spec, clock, crush, rng);
      double bound = std::exp(-1000.0 * step.wait) * h1_norm(u) * (1 + 1e-9) + 1e-30;
      CHECK(dist_h1(step.state, step.kick) <= bound);
    }
  }

  SUBCASE("two seeds give the same one-step law") {
    SpectralField u = mode_field(grid, 2, {1.0, 0.0});
    const int n = 20000;
    std::vector<double> a(n), b(n);
    EnergyParams e{0.25, 1.0};
    for (int i = 0; i < n; ++i) {
      ReplicaRng ra = ReplicaRng::make(48, i);
      ReplicaRng rb = ReplicaRng::make(49, i);
      a[i] = energy(embedded_step(u, spec, clock, flow, ra).state, e);
      b[i] = energy(embedded_step(u, spec, clock, flow, rb).state, e);
    }
    CHECK(ks_statistic_two(a, b) <= ks_critical_two(n, n, 0.01));
  }
}

TEST_CASE("simulate") {
  auto grid = small_grid();
  FlowParams flow;
  flow.nu = 1.0;
  flow.beta = 1.0;
  flow.dt_max = 0.05;
  ClockSpec clock{1.0};
  KickSpec spec = default_spec(grid);
  EnergyParams e{0.25, 1.0};

  SUBCASE("bookkeeping invariants") {
    ReplicaRng rng = ReplicaRng::make(50, 0);
    std::vector<double> stimes = {0.5, 1.5, 3.7, 9.9};
    TrajectoryLog log = simulate(mode_field(grid, 1, {1.0, 0.0}), 10.0, stimes, spec,
                                 clock, flow, e, rng, {true});
    REQUIRE(!log.diverged);
    double acc = 0.0;
    for (std::size_t k = 0; k < log.waits.size(); ++k) {
      acc += log.waits[k];
      CHECK(log.kick_times[k] == doctest::Approx(acc).epsilon(1e-12));
      if (k > 0) CHECK(log.kick_times[k] > log.kick_times[k - 1]);
    }
    // N_t agrees with direct counting.
    for (double t : {0.1, 2.0, 5.0, 10.0}) {
      int direct = 0;
      for (double tau : log.kick_times)
        if (tau <= t) ++direct;
      CHECK(log.kicks_before(t) == direct);
    }
    // Dense samples are the flow applied to the latest post-kick state.
    for (const auto& s : log.samples) {
      int k = log.kicks_before(s.t);
      SpectralField base = (k == 0) ? mode_field(grid, 1, {1.0, 0.0})
                                    : log.states_at_kicks[k - 1];
      double tau = (k == 0) ? 0.0 : log.kick_times[k - 1];
      CHECK(dist_h1(s.state, evolve(base, s.t - tau, flow)) == 0.0);
    }
  }

  SUBCASE("no kicks before horizon reproduces the free flow") {
    // Find a seed whose first waiting time exceeds the horizon.
    double horizon = 0.4;
    for (int seed = 0;; ++seed) {
      ReplicaRng probe = ReplicaRng::make(51, seed);
      if (sample_waiting_time(clock, probe.clock) > horizon) {
        ReplicaRng rng = ReplicaRng::make(51, seed);
        SpectralField u0 = mode_field(grid, 1, {1.0, 0.0});
        TrajectoryLog log = simulate(u0, horizon, {0.2, 0.39}, spec, clock, flow, e, rng, {});
        CHECK(log.kick_times.empty());
        for (const auto& s : log.samples)
          CHECK(dist_h1(s.state, evolve(u0, s.t, flow)) == 0.0);
        break;
      }
      REQUIRE(seed < 100);
    }
  }

  SUBCASE("identical seeds reproduce identical logs") {
    ReplicaRng r1 = ReplicaRng::make(52, 3);
    ReplicaRng r2 = ReplicaRng::make(52, 3);
    std::vector<double> stimes = {1.0, 2.0};
    TrajectoryLog a = simulate(zero_field(grid), 5.0, stimes, spec, clock, flow, e, r1, {});
    TrajectoryLog b = simulate(zero_field(grid), 5.0, stimes, spec, clock, flow, e, r2, {});
    CHECK(trajectory_events_json(a) == trajectory_events_json(b));
    CHECK(trajectory_dense_csv(a, e, 4) == trajectory_dense_csv(b, e, 4));
    ReplicaRng r3 = ReplicaRng::make(53, 3);
    TrajectoryLog c = simulate(zero_field(grid), 5.0, stimes, spec, clock, flow, e, r3, {});
    CHECK(trajectory_events_json(a) != trajectory_events_json(c));
  }

  SUBCASE("invalid horizon and sample times") {
    ReplicaRng rng = ReplicaRng::make(54, 0);
    CHECK_THROWS_AS(simulate(zero_field(grid), 0.0, {}, spec, clock, flow, e, rng, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate(zero_field(grid), 1.0, {2.0}, spec, clock, flow, e, rng, {}),
                    std::invalid_argument);
  }
}

TEST_CASE("kick independence across disjoint blocks") {
  auto grid = small_grid();
  KickSpec spec = default_spec(grid);
  CounterRng rng(55);
  const int n = 20000;
  std::vector<double> first(n), second(n);
  for (int i = 0; i < n; ++i) {
    first[i] = std::tanh(basis_coordinate(sample_kick(spec, grid, rng), 0));
    second[i] = std::tanh(basis_coordinate(sample_kick(spec, grid, rng), 0));
  }
  double mx = mean(first), my = mean(second);
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (int i = 0; i < n; ++i) {
    cov += (first[i] - mx) * (second[i] - my);
    vx += (first[i] - mx) * (first[i] - mx);
    vy += (second[i] - my) * (second[i] - my);
  }
  double corr = cov / std::sqrt(vx * vy);
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(double(n)));
}

TEST_CASE("one-step energy recursion envelope") {
  auto grid = small_grid();
  FlowParams flow;
  flow.nu = 1.0;
  flow.beta = 1.0;
  flow.dt_max = 0.05;
  ClockSpec clock{1.0};
  KickSpec spec = default_spec(grid);
  EnergyParams e{0.25, 1.0};
  const double a = 0.5;  // decay rate with margin for this config
  const double eps = 0.1;

  // Fit C_eps on one half of the steps, validate on the other half.
  std::vector<double> needed;
  ReplicaRng rng = ReplicaRng::make(56, 0);
  SpectralField u = mode_field(grid, 1, {2.0, 0.0});
  std::vector<std::array<double, 3>> rows;  // H_k, e^{-a t}H_{k-1}, H(eta)
  for (int k = 0; k < 400; ++k) {
    double h_prev = energy(u, e);
    EmbeddedStep step = embedded_step(u, spec, clock, flow, rng);
    double h_eta = std::max(energy(step.kick, e), 1e-12);
    rows.push_back({energy(step.state, e), std::exp(-a * step.wait) * h_prev, h_eta});
    u = step.state;
  }
  double c_eps = 0.0;
  for (std::size_t k = 0; k < rows.size() / 2; ++k)
    c_eps = std::max(c_eps, (rows[k][0] - (1 + eps) * rows[k][1]) / rows[k][2]);
  int violations = 0;
  for (std::size_t k = rows.size() / 2; k < rows.size(); ++k)
    if (rows[k][0] > (1 + eps) * rows[k][1] + 1.05 * c_eps * rows[k][2]) ++violations;
  CHECK(c_eps < 50.0);
  CHECK(violations <= 2);
}

TEST_CASE("moment_estimate") {
  SUBCASE("needs enough chains") {
    std::vector<std::vector<double>> few(50, std::vector<double>{1.0, 0.5});
    CHECK_THROWS_AS(moment_estimate(few, 1.0), InsufficientDataError);
  }

  SUBCASE("geometric decay recovered") {
    std::vector<std::vector<double>> chains(200);
    for (auto& c : chains) {
      double h = 8.0;
      for (int k = 0; k < 30; ++k) {
        c.push_back(h);
        h *= 0.6;
      }
    }
    MomentReport r1 = moment_estimate(chains, 1.0);
    CHECK(r1.gamma == doctest::Approx(0.6).epsilon(0.05));
    CHECK(r1.sup == doctest::Approx(8.0).epsilon(1e-12));
    MomentReport r3 = moment_estimate(chains, 3.0);
    CHECK(r3.gamma == doctest::Approx(0.216).epsilon(0.05));
  }

  SUBCASE("zero-kick chains recover the dissipation rate") {
    // Without kicks H decays like e^{-a t} between samples with a = 2 nu
    // alpha_1 at small amplitude, so E H(u_k) = H0 (lambda/(lambda+a))^k.
    auto grid = small_grid();
    FlowParams flow;
    flow.nu = 1.0;
    flow.beta = 1.0;
    flow.dt_max = 0.05;
    ClockSpec clock{1.0};
    KickSpec quiet = KickSpec::power_law(grid->n_coords(), 0.0, 1.0,
                                         DensityFamily::parse("uniform_symmetric", 1.0));
    EnergyParams e{0.25, 1.0};
    const int n_chains = 150, n_kicks = 12;
    std::vector<std::vector<double>> chains(n_chains);
    for (int i = 0; i < n_chains; ++i) {
      ReplicaRng rng = ReplicaRng::make(58, i);
      SpectralField u = mode_field(grid, 1, {0.05, 0.0});
      std::vector<double> hs = {energy(u, e)};
      for (int k = 0; k < n_kicks; ++k) {
        u = embedded_step(u, quiet, clock, flow, rng).state;
        hs.push_back(energy(u, e));
      }
      chains[i] = std::move(hs);
    }
    MomentReport r1 = moment_estimate(chains, 1.0);
    CHECK(r1.gamma == doctest::Approx(1.0 / 3.0).epsilon(0.15));
    MomentReport r3 = moment_estimate(chains, 3.0);
    CHECK(r3.gamma == doctest::Approx(1.0 / 7.0).epsilon(0.25));
    for (std::size_t k = 1; k < r1.mean_hp.size(); ++k)
      CHECK(r1.mean_hp[k] <= r1.mean_hp[k - 1]);
  }

  SUBCASE("flat-at-zero chains plateau") {
    std::vector<std::vector<double>> chains(150, std::vector<double>(20, 0.0));
    MomentReport r = moment_estimate(chains, 1.0);
    CHECK(r.sup == 0.0);
    CHECK(r.gamma == 0.0);
  }
}

TEST_CASE("hitting time") {
  CHECK(hitting_time_tau_R({0.5, 2.0, 0.1}, 1.0) == 0);
  CHECK(hitting_time_tau_R({3.0, 2.0, 0.1}, 1.0) == 2);
  CHECK(!hitting_time_tau_R({3.0, 2.0}, 1.0).has_value());
  CHECK(hitting_time_tau_R({3.0, 2.0}, 100.0) == 0);
  CHECK_THROWS_AS(hitting_time_tau_R({1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("exponential moment of the hitting time grows with energy") {
  auto grid = small_grid();
  FlowParams flow;
  flow.nu = 1.0;
  flow.beta = 1.0;
  flow.dt_max = 0.05;
  ClockSpec clock{1.0};
  KickSpec spec = default_spec(grid);
  const double R = 1.0, delta = 0.05;
  std::vector<double> means;
  for (double amp : {1.0, 3.0, 6.0}) {
    std::vector<double> vals;
    for (int r = 0; r < 60; ++r) {
      ReplicaRng rng = ReplicaRng::make(57, std::uint64_t(amp * 10) * 100 + r);
      SpectralField u = mode_field(grid, 1, {amp, 0.0});
      std::vector<double> norms = {h1_norm(u)};
      for (int k = 0; k < 80 && norms.back() > R; ++k) {
        u = embedded_step(u, spec, clock, flow, rng).state;
        norms.push_back(h1_norm(u));
      }
      auto tau = hitting_time_tau_R(norms, R);
      REQUIRE(tau.has_value());
      vals.push_back(std::exp(delta * double(*tau)));
    }
    means.push_back(mean(vals));
    CHECK(std::isfinite(means.back()));
  }
  CHECK(means[0] <= means[1]);
  CHECK(means[1] <= means[2]);
}
