#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cgl/rng.hpp"
#include "cgl/spectral.hpp"

using namespace cgl;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

SpectralField random_field(const GridPtr& grid, CounterRng& rng, double decay = 2.0) {
  SpectralField u(grid);
  for (int j = 0; j < grid->n_modes(); ++j) {
    double w = std::pow(double(j + 1), -decay);
    u.coeffs[j] = Complex(rng.symmetric() * w, rng.symmetric() * w);
  }
  return u;
}

// Composite Simpson on [0, L].
template <typename F>
double simpson(F f, double L, int n) {
  double h = L / double(n);
  double s = f(0.0) + f(L);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Evaluate u and its x-derivative directly from the sine series.
Complex eval_series(const SpectralField& u, double x) {
  double L = u.grid->length();
  Complex s(0, 0);
  for (int j = 0; j < u.n_modes(); ++j)
    s += u.coeffs[j] * std::sqrt(2.0 / L) * std::sin(double(j + 1) * kPi * x / L);
  return s;
}

Complex eval_series_deriv(const SpectralField& u, double x) {
  double L = u.grid->length();
  Complex s(0, 0);
  for (int j = 0; j < u.n_modes(); ++j) {
    double k = double(j + 1) * kPi / L;
    s += u.coeffs[j] * std::sqrt(2.0 / L) * k * std::cos(double(j + 1) * kPi * x / L);
  }
  return s;
}

}  // namespace

TEST_CASE("eigenvalues") {
  auto grid = Grid::make(kPi, 8, 16);
  CHECK(grid->eigenvalue(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(grid->eigenvalue(2) == doctest::Approx(4.0).epsilon(1e-14));
  auto unit = Grid::make(1.0, 8, 16);
  CHECK(unit->eigenvalue(3) == doctest::Approx(88.826439609804231).epsilon(1e-13));
  CHECK_THROWS_AS(grid->eigenvalue(0), std::out_of_range);
  CHECK_THROWS_AS(grid->eigenvalue(9), std::out_of_range);
  for (int j = 2; j <= 8; ++j) CHECK(grid->eigenvalue(j) > grid->eigenvalue(j - 1));
}

TEST_CASE("grid invariants") {
  CHECK_THROWS_AS(Grid::make(-1.0, 8, 16), std::invalid_argument);
  CHECK_THROWS_AS(Grid::make(1.0, 2, 16), std::invalid_argument);
  CHECK_THROWS_AS(Grid::make(1.0, 8, 15), std::invalid_argument);
  auto g = Grid::make(1.0, 8);
  CHECK(g->n_phys() == 32);
}

TEST_CASE("transforms") {
  auto grid = Grid::make(kPi, 32, 128);

  SUBCASE("zero roundtrip") {
    auto phys = to_physical(zero_field(grid));
    for (const auto& v : phys) CHECK(std::abs(v) == 0.0);
    CHECK(l2_norm(to_spectral(grid, phys)) == 0.0);
  }

  SUBCASE("basis mode samples") {
    auto phys = to_physical(mode_field(grid, 1, {1.0, 0.0}));
    for (int i = 0; i < grid->n_phys(); ++i) {
      double expect = std::sqrt(2.0 / kPi) * std::sin(grid->node(i));
      CHECK(phys[i].real() == doctest::Approx(expect).epsilon(1e-13));
      CHECK(phys[i].imag() == 0.0);
    }
  }

  SUBCASE("random roundtrip") {
    CounterRng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      SpectralField u = random_field(grid, rng);
      SpectralField back = to_spectral(grid, to_physical(u));
      CHECK(dist_h1(u, back) / h1_norm(u) <= 1e-12);
    }
  }

  SUBCASE("linearity") {
    CounterRng rng(17);
    SpectralField u = random_field(grid, rng);
    SpectralField v = random_field(grid, rng);
    auto pu = to_physical(u), pv = to_physical(v);
    auto psum = to_physical(u + 2.0 * v);
    for (std::size_t i = 0; i < pu.size(); ++i)
      CHECK(std::abs(psum[i] - (pu[i] + 2.0 * pv[i])) <= 1e-13);
  }

  SUBCASE("shape errors") {
    std::vector<Complex> wrong(grid->n_phys() - 1);
    SpectralField out;
    CHECK_THROWS_AS(to_spectral(grid, wrong, out), std::invalid_argument);
  }
}

TEST_CASE("parseval against quadrature") {
  auto grid = Grid::make(2.5, 16, 64);
  CounterRng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    SpectralField u = random_field(grid, rng);
    double L = grid->length();
    double l2 = simpson([&](double x) { return std::norm(eval_series(u, x)); }, L, 4096);
    double h1 = simpson([&](double x) { return std::norm(eval_series_deriv(u, x)); }, L, 4096);
    CHECK(l2_norm_sq(u) == doctest::Approx(l2).epsilon(1e-10));
    CHECK(h1_norm_sq(u) == doctest::Approx(h1).epsilon(1e-10));
  }
}

TEST_CASE("projections") {
  auto grid = Grid::make(kPi, 16, 32);

  SUBCASE("example split") {
    SpectralField u = mode_field(grid, 1, {1.0, 0.0}) + mode_field(grid, 5, {1.0, 0.0});
    SpectralField low = project_low(u, 3);
    SpectralField high = project_high(u, 3);
    CHECK(dist_h1(low, mode_field(grid, 1, {1.0, 0.0})) == 0.0);
    CHECK(dist_h1(high, mode_field(grid, 5, {1.0, 0.0})) == 0.0);
  }

  SUBCASE("zero maps to zero") {
    SpectralField z = zero_field(grid);
    CHECK(h1_norm(project_low(z, 4)) == 0.0);
    CHECK(h1_norm(project_high(z, 4)) == 0.0);
    CHECK(h1_norm(project_high_l2(z, 4)) == 0.0);
  }

  SUBCASE("partition, idempotence, orthogonality") {
    CounterRng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
      SpectralField u = random_field(grid, rng);
      int N = 1 + int(rng.uniform01() * (grid->n_modes() - 2));
      SpectralField low = project_low(u, N);
      SpectralField high = project_high(u, N);
      CHECK(dist_h1(low + high, u) <= 1e-14 * h1_norm(u));
      CHECK(dist_h1(project_low(low, N), low) == 0.0);
      CHECK(dist_h1(project_high(high, N), high) == 0.0);
      // Orthogonality in all three norms: Pythagoras.
      CHECK(l2_norm_sq(low) + l2_norm_sq(high) ==
            doctest::Approx(l2_norm_sq(u)).epsilon(1e-12));
      CHECK(h1_norm_sq(low) + h1_norm_sq(high) ==
            doctest::Approx(h1_norm_sq(u)).epsilon(1e-12));
      CHECK(h2_norm_sq(low) + h2_norm_sq(high) ==
            doctest::Approx(h2_norm_sq(u)).epsilon(1e-12));
    }
  }

  SUBCASE("tail bound by h2 norm") {
    CounterRng rng(14);
    for (int trial = 0; trial < 20; ++trial) {
      SpectralField u = random_field(grid, rng, 1.0);
      for (int Np = 1; Np < grid->n_modes(); ++Np) {
        double lhs = h1_norm(project_high_l2(u, Np + 1));
        double rhs = h2_norm(u) / std::sqrt(grid->eigenvalue(Np + 1));
        CHECK(lhs <= rhs * (1.0 + 1e-12));
      }
    }
  }

  SUBCASE("cutoff range errors") {
    SpectralField u = zero_field(grid);
    CHECK_THROWS_AS(project_low(u, 0), std::out_of_range);
    CHECK_THROWS_AS(project_low(u, 16), std::out_of_range);
    CHECK_THROWS_AS(project_high_l2(u, 17), std::out_of_range);
  }
}

TEST_CASE("basis coordinates") {
  auto grid = Grid::make(kPi, 8, 16);
  CounterRng rng(15);
  SpectralField u = random_field(grid, rng);
  double sum_sq = 0.0;
  for (int c = 0; c < grid->n_coords(); ++c) {
    double v = basis_coordinate(u, c);
    sum_sq += v * v;
  }
  CHECK(sum_sq == doctest::Approx(h1_norm_sq(u)).epsilon(1e-12));
  set_basis_coordinate(u, 3, 0.7);
  CHECK(basis_coordinate(u, 3) == doctest::Approx(0.7).epsilon(1e-14));
  add_basis_coordinate(u, 3, -0.7);
  CHECK(basis_coordinate(u, 3) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(basis_coordinate(u, 16), std::out_of_range);
}

TEST_CASE("energy") {
  auto grid = Grid::make(kPi, 32, 128);
  EnergyParams p{0.1, 1.0};

  SUBCASE("zero") { CHECK(energy(zero_field(grid), p) == 0.0); }

  SUBCASE("first mode against quadrature oracle") {
    SpectralField u = mode_field(grid, 1, {1.0, 0.0});
    double quartic = simpson(
        [&](double x) {
          double v = std::sqrt(2.0 / kPi) * std::sin(x);
          return v * v * v * v;
        },
        kPi, 100000);
    double expect = 0.1 * 1.0 + 0.25 * quartic;
    CHECK(expect == doctest::Approx(0.21936620731892151).epsilon(1e-9));
    CHECK(energy(u, p) == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("homogeneity of the two terms") {
    CounterRng rng(16);
    SpectralField u = random_field(grid, rng);
    SpectralField u2 = 2.0 * u;
    CHECK(h1_norm_sq(u2) == doctest::Approx(4.0 * h1_norm_sq(u)).epsilon(1e-12));
    CHECK(quartic_integral(u2) == doctest::Approx(16.0 * quartic_integral(u)).epsilon(1e-12));
    CHECK(energy(u, p) >= p.alpha * h1_norm_sq(u));
  }
}
