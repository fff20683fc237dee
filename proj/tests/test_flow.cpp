#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cgl/flow.hpp"
#include "cgl/rng.hpp"

using namespace cgl;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

SpectralField random_field(const GridPtr& grid, CounterRng& rng, double decay = 3.0,
                           double h1 = 1.0) {
  SpectralField u(grid);
  for (int j = 0; j < grid->n_modes(); ++j) {
    double w = std::pow(double(j + 1), -decay);
    u.coeffs[j] = Complex(rng.symmetric() * w, rng.symmetric() * w);
  }
  return (h1 / h1_norm(u)) * u;
}

}  // namespace

TEST_CASE("heat substep") {
  auto grid = Grid::make(kPi, 16, 32);
  FlowParams p;
  p.nu = 1.0;

  SUBCASE("single mode factor") {
    SpectralField u = mode_field(grid, 1, {1.0, 0.0});
    SpectralField r = heat_substep(u, 1.0, p);
    CHECK(r.coeffs[0].real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  }

  SUBCASE("identity at t=0 and contraction") {
    CounterRng rng(21);
    SpectralField u = random_field(grid, rng);
    CHECK(dist_h1(heat_substep(u, 0.0, p), u) == 0.0);
    CHECK(h1_norm(heat_substep(u, 0.3, p)) <= h1_norm(u));
  }

  SUBCASE("exponential law") {
    CounterRng rng(22);
    SpectralField u = random_field(grid, rng);
    SpectralField two = heat_substep(heat_substep(u, 0.4, p), 0.6, p);
    SpectralField one = heat_substep(u, 1.0, p);
    CHECK(dist_h1(two, one) <= 1e-12 * h1_norm(u));
  }

  SUBCASE("negative time rejected") {
    SpectralField u = zero_field(grid);
    CHECK_THROWS_AS(heat_substep(u, -1.0, p), std::invalid_argument);
  }
}

TEST_CASE("phase substep") {
  auto grid = Grid::make(kPi, 32, 128);
  FlowParams p;
  p.beta = 1.0;

  SUBCASE("identity at t=0") {
    CounterRng rng(23);
    SpectralField u = random_field(grid, rng);
    CHECK(dist_h1(phase_substep(u, 0.0, p), u) == 0.0);
  }

  SUBCASE("pointwise rotation on band-limited input") {
    // The rotation generates harmonics; with support on modes <= n/5 and a
    // small step the leaked tail sits below the modulus tolerance.
    CounterRng rng(24);
    SpectralField u(grid);
    for (int j = 0; j < 6; ++j)
      u.coeffs[j] = Complex(rng.symmetric(), rng.symmetric()) * std::pow(j + 1.0, -2.0);
    double t = 1e-4;
    auto before = to_physical(u);
    auto after = to_physical(phase_substep(u, t, p));
    double max_mod_gap = 0.0, max_rot_gap = 0.0;
    for (std::size_t i = 0; i < before.size(); ++i) {
      max_mod_gap = std::max(max_mod_gap, std::abs(std::abs(after[i]) - std::abs(before[i])));
      double angle = -p.beta * std::norm(before[i]) * t;
      Complex expect = before[i] * Complex(std::cos(angle), std::sin(angle));
      max_rot_gap = std::max(max_rot_gap, std::abs(after[i] - expect));
    }
    CHECK(max_mod_gap <= 1e-12);
    CHECK(max_rot_gap <= 1e-9);
  }

  SUBCASE("l2 norm preserved within dealiasing tolerance") {
    CounterRng rng(25);
    for (int trial = 0; trial < 5; ++trial) {
      SpectralField u = random_field(grid, rng, 3.0, 1.0);
      SpectralField r = phase_substep(u, 0.01, p);
      CHECK(std::abs(l2_norm(r) - l2_norm(u)) <= 1e-10);
    }
  }
}

TEST_CASE("evolve") {
  auto grid = Grid::make(kPi, 32, 128);
  FlowParams p;
  p.nu = 1.0;
  p.beta = 1.0;
  p.dt_max = 1e-2;

  SUBCASE("beta=0 equals pure heat") {
    FlowParams q = p;
    q.beta = 0.0;
    CounterRng rng(26);
    SpectralField u = random_field(grid, rng);
    CHECK(dist_h1(evolve(u, 0.7, q), heat_substep(u, 0.7, q)) == 0.0);
  }

  SUBCASE("zero fixed point and t=0") {
    CHECK(h1_norm(evolve(zero_field(grid), 2.0, p)) == 0.0);
    CounterRng rng(27);
    SpectralField u = random_field(grid, rng);
    CHECK(dist_h1(evolve(u, 0.0, p), u) == 0.0);
  }

  SUBCASE("strang self-convergence order") {
    CounterRng rng(28);
    SpectralField u = random_field(grid, rng, 3.0, 1.5);
    const double t = 0.1;
    auto with_m = [&](int m) {
      FlowParams q = p;
      q.dt_max = t / double(m);
      return evolve(u, t, q);
    };
    SpectralField ref = with_m(256);
    double e8 = dist_h1(with_m(8), ref);
    double e16 = dist_h1(with_m(16), ref);
    double e32 = dist_h1(with_m(32), ref);
    CHECK(e8 / e16 > 3.2);
    CHECK(e8 / e16 < 4.8);
    CHECK(e16 / e32 > 3.2);
    CHECK(e16 / e32 < 4.8);
  }

  SUBCASE("semigroup composition") {
    CounterRng rng(29);
    SpectralField u = random_field(grid, rng);
    SpectralField split = evolve(evolve(u, 0.5, p), 0.5, p);
    SpectralField whole = evolve(u, 1.0, p);
    CHECK(dist_h1(split, whole) <= 1e-12 * h1_norm(u));
  }

  SUBCASE("divergence guard") {
    FlowParams q = p;
    q.blowup_h1 = 1e-3;
    CounterRng rng(30);
    SpectralField u = random_field(grid, rng, 3.0, 1.0);
    CHECK_THROWS_AS(evolve(u, 1.0, q), DivergenceError);
  }
}

TEST_CASE("tangent flow matches finite differences") {
  auto grid = Grid::make(kPi, 16, 64);
  FlowParams p;
  p.nu = 1.0;
  p.beta = 1.0;
  p.dt_max = 1e-2;
  CounterRng rng(31);
  SpectralField v = random_field(grid, rng, 2.0, 1.0);
  SpectralField dir = mode_field(grid, 1, {1.0, 0.0});
  const double t = 0.3, eps = 1e-6;
  SpectralField fd = (1.0 / eps) * (evolve(v + eps * dir, t, p) - evolve(v, t, p));
  SpectralField lin = tangent_evolve(v, dir, t, p);
  CHECK(dist_h1(fd, lin) / h1_norm(lin) <= 1e-4);
}

TEST_CASE("lipschitz and trajectory-smoothing envelopes") {
  // Both bounds have the shape C exp(C (norms^6)); fit the constant on half
  // of a state sweep and validate the envelope on the other half.
  auto grid = Grid::make(kPi, 16, 32);
  FlowParams p;
  p.nu = 1.0;
  p.beta = 1.0;
  p.dt_max = 1e-2;
  CounterRng rng(37);

  SUBCASE("flow difference quotient") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 40; ++i) {
      SpectralField u = random_field(grid, rng, 2.0, 0.2 + 0.045 * i);
      SpectralField v = random_field(grid, rng, 2.0, 0.2 + 0.04 * i);
      double q = lipschitz_probe(u, v, 0.5, p);
      xs.push_back(std::pow(h1_norm(u), 6) + std::pow(h1_norm(v), 6));
      ys.push_back(std::log(q));
    }
    double c_fit = 0.0;
    for (int i = 0; i < 20; ++i) c_fit = std::max(c_fit, std::max(0.0, ys[i]) / (1.0 + xs[i]));
    for (int i = 20; i < 40; ++i) CHECK(ys[i] <= 1.3 * c_fit * (1.0 + xs[i]) + 0.5);
  }

  SUBCASE("sup of t |S_t u|_2^2 along one trajectory") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 30; ++i) {
      SpectralField u0 = random_field(grid, rng, 1.5, 0.2 + 0.06 * i);
      double sup = 0.0;
      SpectralField u = u0;
      double t = 0.0;
      for (int k = 0; k < 40; ++k) {
        u = evolve(u, 0.05, p);
        t += 0.05;
        sup = std::max(sup, t * h2_norm_sq(u));
      }
      xs.push_back(std::pow(h1_norm(u0), 6));
      ys.push_back(std::log(sup));
    }
    double c_fit = 1e-6;
    for (int i = 0; i < 15; ++i) c_fit = std::max(c_fit, std::max(0.0, ys[i]) / (1.0 + xs[i]));
    for (int i = 15; i < 30; ++i) CHECK(ys[i] <= 1.3 * c_fit * (1.0 + xs[i]) + 1.0);
  }
}

TEST_CASE("calibrate_alpha") {
  auto grid = Grid::make(kPi, 16, 32);

  SUBCASE("near-linear flow recovers the slow-mode rate") {
    FlowParams p;
    p.nu = 1.0;
    p.beta = 1e-8;
    std::vector<SpectralField> trials = {mode_field(grid, 1, {0.2, 0.0}),
                                         mode_field(grid, 1, {0.0, 0.1}),
                                         zero_field(grid)};
    CalibrateOptions opts;
    opts.beta = p.beta;
    Calibration cal = calibrate_alpha(p, trials, opts);
    CHECK(cal.energy.alpha == doctest::Approx(0.25));
    CHECK(cal.decay_rate > 1.8);
    CHECK(cal.decay_rate < 2.05);
  }

  SUBCASE("fitted rate valid on held-out states") {
    FlowParams p;
    p.nu = 1.0;
    p.beta = 1.0;
    CounterRng rng(32);
    std::vector<SpectralField> trials;
    for (int i = 0; i < 8; ++i) trials.push_back(random_field(grid, rng, 2.0, 0.3 * (i + 1)));
    Calibration cal = calibrate_alpha(p, trials, {});
    for (int i = 0; i < 10; ++i) {
      SpectralField u = random_field(grid, rng, 2.5, 0.4 * (i + 1));
      double h0 = energy(u, cal.energy);
      SpectralField ut = evolve(u, 3.0, p);
      CHECK(energy(ut, cal.energy) <= h0 * std::exp(-cal.decay_rate * 3.0) * (1 + 1e-6));
    }
  }

  SUBCASE("empty trials and exhausted schedule") {
    FlowParams p;
    CHECK_THROWS_AS(calibrate_alpha(p, {}, {}), std::invalid_argument);
    CalibrateOptions opts;
    opts.alpha0 = 0.25;
    opts.alpha_min = 0.5;  // empty halving schedule
    std::vector<SpectralField> trials = {mode_field(grid, 1, {1.0, 0.0})};
    CHECK_THROWS_AS(calibrate_alpha(p, trials, opts), CalibrationError);
  }
}

TEST_CASE("enstrophy budget") {
  auto grid = Grid::make(kPi, 16, 32);
  FlowParams p;
  p.nu = 1.0;
  p.beta = 1.0;
  EnergyParams e{0.25, 1.0};

  SUBCASE("zero state") {
    BudgetReport rep = enstrophy_budget_check(zero_field(grid), 1.0, p, e);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.ok(0.0));
  }

  SUBCASE("first mode within tolerance of fine-dt reference") {
    SpectralField u0 = mode_field(grid, 1, {1.0, 0.0});
    BudgetReport rep = enstrophy_budget_check(u0, 5.0, p, e);
    CHECK(rep.ok(0.02));
    FlowParams fine = p;
    fine.dt_max = 1e-3;
    BudgetReport ref = enstrophy_budget_check(u0, 5.0, fine, e);
    CHECK(rep.lhs == doctest::Approx(ref.lhs).epsilon(0.02));
  }

  SUBCASE("running integral is nondecreasing") {
    CounterRng rng(33);
    FlowTrace trace;
    evolve_traced(random_field(grid, rng), 2.0, p, e, trace);
    for (std::size_t i = 1; i < trace.enstrophy_integral.size(); ++i)
      CHECK(trace.enstrophy_integral[i] >= trace.enstrophy_integral[i - 1]);
  }
}

TEST_CASE("smoothing probe") {
  auto grid = Grid::make(kPi, 32, 64);
  FlowParams p;
  p.nu = 1.0;
  p.beta = 0.0;

  SUBCASE("closed form for a first-mode difference") {
    SpectralField u = mode_field(grid, 2, {0.5, 0.0});
    SpectralField v = u + mode_field(grid, 1, {1e-3, 0.0});
    for (double t : {0.01, 0.1, 0.5}) {
      double got = smoothing_probe(u, v, {t}, p)[0];
      double expect = std::sqrt(t) * std::exp(-t);  // alpha_1 = 1 at L = pi
      CHECK(got == doctest::Approx(expect).epsilon(1e-10));
    }
  }

  SUBCASE("linear closed form for spread differences") {
    CounterRng rng(34);
    SpectralField u = random_field(grid, rng);
    SpectralField delta = random_field(grid, rng, 1.0, 1e-3);
    SpectralField v = u + delta;
    double t = 0.05;
    double got = smoothing_probe(u, v, {t}, p)[0];
    double num = 0.0, den = 0.0;
    for (int j = 0; j < grid->n_modes(); ++j) {
      double a = grid->eigenvalue(j + 1);
      double m2 = std::norm(delta.coeffs[j]);
      num += a * a * std::exp(-2.0 * a * t) * m2;
      den += a * m2;
    }
    CHECK(got == doctest::Approx(std::sqrt(t * num / den)).epsilon(1e-9));
  }

  SUBCASE("degenerate input") {
    SpectralField u = mode_field(grid, 1, {1.0, 0.0});
    CHECK_THROWS_AS(smoothing_probe(u, u, {0.1}, p), std::invalid_argument);
    SpectralField v = mode_field(grid, 2, {1.0, 0.0});
    CHECK_THROWS_AS(smoothing_probe(u, v, {0.0}, p), std::invalid_argument);
  }
}

TEST_CASE("lipschitz probe") {
  auto grid = Grid::make(kPi, 16, 32);

  SUBCASE("pure heat contracts") {
    FlowParams p;
    p.nu = 1.0;
    p.beta = 0.0;
    CounterRng rng(35);
    SpectralField u = random_field(grid, rng);
    SpectralField v = random_field(grid, rng);
    double q = lipschitz_probe(u, v, 0.4, p);
    CHECK(q <= 1.0);
    CHECK(q == doctest::Approx(lipschitz_probe(v, u, 0.4, p)).epsilon(1e-14));
  }

  SUBCASE("small-difference limit matches the tangent flow") {
    FlowParams p;
    p.nu = 1.0;
    p.beta = 1.0;
    p.dt_max = 1e-2;
    CounterRng rng(36);
    SpectralField v = random_field(grid, rng, 2.0, 1.0);
    SpectralField dir = mode_field(grid, 1, {1.0, 0.0});
    double t = 0.2;
    double lin = h1_norm(tangent_evolve(v, dir, t, p)) / h1_norm(dir);
    for (double eps : {1e-5, 5e-6}) {
      double fd = lipschitz_probe(v + eps * dir, v, t, p);
      CHECK(std::abs(fd / lin - 1.0) <= 1e-4);
    }
    CHECK_THROWS_AS(lipschitz_probe(v, v, t, p), std::invalid_argument);
  }
}
