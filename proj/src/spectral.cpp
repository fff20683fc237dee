#include "cgl/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace cgl {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

Grid::Grid(double length, int n_modes, int n_phys)
    : length_(length), n_modes_(n_modes), n_phys_(n_phys) {
  eigs_.resize(n_modes_);
  for (int j = 0; j < n_modes_; ++j) {
    double k = double(j + 1) * kPi / length_;
    eigs_[j] = k * k;
  }
  const int M = n_phys_ + 1;
  sine_fwd_.resize(std::size_t(n_phys_) * n_modes_);
  sine_bwd_.resize(std::size_t(n_modes_) * n_phys_);
  for (int i = 0; i < n_phys_; ++i) {
    for (int j = 0; j < n_modes_; ++j) {
      double s = std::sin(kPi * double((i + 1)) * double(j + 1) / double(M));
      sine_fwd_[std::size_t(i) * n_modes_ + j] = s;
      sine_bwd_[std::size_t(j) * n_phys_ + i] = s;
    }
  }
}

std::shared_ptr<const Grid> Grid::make(double length, int n_modes, int n_phys) {
  if (!(length > 0.0)) throw std::invalid_argument("grid: length must be positive");
  if (n_modes < 4) throw std::invalid_argument("grid: n_modes must be >= 4");
  if (n_phys == 0) n_phys = 4 * n_modes;
  if (n_phys < 2 * n_modes)
    throw std::invalid_argument("grid: n_phys must be >= 2*n_modes");
  return std::shared_ptr<const Grid>(new Grid(length, n_modes, n_phys));
}

double Grid::eigenvalue(int j) const {
  if (j < 1 || j > n_modes_) throw std::out_of_range("grid: mode index out of range");
  return eigs_[j - 1];
}

SpectralField zero_field(const GridPtr& grid) { return SpectralField(grid); }

SpectralField mode_field(const GridPtr& grid, int j, Complex amp) {
  if (j < 1 || j > grid->n_modes()) throw std::out_of_range("mode index out of range");
  SpectralField u(grid);
  u.coeffs[j - 1] = amp;
  return u;
}

static void check_same_grid(const SpectralField& a, const SpectralField& b) {
  if (a.grid.get() != b.grid.get() || a.coeffs.size() != b.coeffs.size())
    throw std::invalid_argument("field shape mismatch");
}

SpectralField operator+(const SpectralField& a, const SpectralField& b) {
  check_same_grid(a, b);
  SpectralField r = a;
  for (std::size_t i = 0; i < r.coeffs.size(); ++i) r.coeffs[i] += b.coeffs[i];
  return r;
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
  check_same_grid(a, b);
  SpectralField r = a;
  for (std::size_t i = 0; i < r.coeffs.size(); ++i) r.coeffs[i] -= b.coeffs[i];
  return r;
}

SpectralField operator*(double s, const SpectralField& a) {
  SpectralField r = a;
  for (auto& c : r.coeffs) c *= s;
  return r;
}

double l2_norm_sq(const SpectralField& u) {
  double s = 0.0;
  for (const auto& c : u.coeffs) s += std::norm(c);
  return s;
}

double h1_norm_sq(const SpectralField& u) {
  double s = 0.0;
  const auto& eig = u.grid->eigenvalues();
  for (std::size_t j = 0; j < u.coeffs.size(); ++j) s += eig[j] * std::norm(u.coeffs[j]);
  return s;
}

double h2_norm_sq(const SpectralField& u) {
  double s = 0.0;
  const auto& eig = u.grid->eigenvalues();
  for (std::size_t j = 0; j < u.coeffs.size(); ++j)
    s += eig[j] * eig[j] * std::norm(u.coeffs[j]);
  return s;
}

double l2_norm(const SpectralField& u) { return std::sqrt(l2_norm_sq(u)); }
double h1_norm(const SpectralField& u) { return std::sqrt(h1_norm_sq(u)); }
double h2_norm(const SpectralField& u) { return std::sqrt(h2_norm_sq(u)); }

double dist_h1(const SpectralField& a, const SpectralField& b) {
  check_same_grid(a, b);
  double s = 0.0;
  const auto& eig = a.grid->eigenvalues();
  for (std::size_t j = 0; j < a.coeffs.size(); ++j)
    s += eig[j] * std::norm(a.coeffs[j] - b.coeffs[j]);
  return std::sqrt(s);
}

double dist_h2(const SpectralField& a, const SpectralField& b) {
  check_same_grid(a, b);
  double s = 0.0;
  const auto& eig = a.grid->eigenvalues();
  for (std::size_t j = 0; j < a.coeffs.size(); ++j)
    s += eig[j] * eig[j] * std::norm(a.coeffs[j] - b.coeffs[j]);
  return std::sqrt(s);
}

void to_physical(const SpectralField& u, std::vector<Complex>& phys) {
  const Grid& g = *u.grid;
  const int n = g.n_modes();
  const int np = g.n_phys();
  if (int(u.coeffs.size()) != n) throw std::invalid_argument("field shape mismatch");
  phys.assign(np, Complex(0.0, 0.0));
  const double scale = std::sqrt(2.0 / g.length());
  const double* S = g.sine_fwd().data();
  for (int i = 0; i < np; ++i) {
    double re = 0.0, im = 0.0;
    const double* row = S + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) {
      re += row[j] * u.coeffs[j].real();
      im += row[j] * u.coeffs[j].imag();
    }
    phys[i] = Complex(scale * re, scale * im);
  }
}

std::vector<Complex> to_physical(const SpectralField& u) {
  std::vector<Complex> phys;
  to_physical(u, phys);
  return phys;
}

void to_spectral(const GridPtr& grid, const std::vector<Complex>& phys, SpectralField& u) {
  const Grid& g = *grid;
  const int n = g.n_modes();
  const int np = g.n_phys();
  if (int(phys.size()) != np) throw std::invalid_argument("physical shape mismatch");
  u.grid = grid;
  u.coeffs.assign(n, Complex(0.0, 0.0));
  // c_j = sqrt(L/2) * (2/M) * sum_i phys_i sin(ij pi/M)
  const double w = std::sqrt(g.length() / 2.0) * 2.0 / double(np + 1);
  const double* S = g.sine_bwd().data();
  for (int j = 0; j < n; ++j) {
    double re = 0.0, im = 0.0;
    const double* col = S + std::size_t(j) * np;
    for (int i = 0; i < np; ++i) {
      re += col[i] * phys[i].real();
      im += col[i] * phys[i].imag();
    }
    u.coeffs[j] = Complex(w * re, w * im);
  }
}

SpectralField to_spectral(const GridPtr& grid, const std::vector<Complex>& phys) {
  SpectralField u;
  to_spectral(grid, phys, u);
  return u;
}

static void check_cutoff(const SpectralField& u, int N) {
  if (N < 1 || N >= u.n_modes()) throw std::out_of_range("projection cutoff out of range");
}

SpectralField project_low(const SpectralField& u, int N) {
  check_cutoff(u, N);
  SpectralField r = u;
  for (int j = N; j < r.n_modes(); ++j) r.coeffs[j] = Complex(0.0, 0.0);
  return r;
}

SpectralField project_high(const SpectralField& u, int N) {
  check_cutoff(u, N);
  SpectralField r = u;
  for (int j = 0; j < N; ++j) r.coeffs[j] = Complex(0.0, 0.0);
  return r;
}

SpectralField project_high_l2(const SpectralField& u, int Np) {
  if (Np < 1 || Np > u.n_modes()) throw std::out_of_range("projection cutoff out of range");
  SpectralField r = u;
  for (int j = 0; j < Np - 1; ++j) r.coeffs[j] = Complex(0.0, 0.0);
  return r;
}

double basis_coordinate(const SpectralField& u, int c) {
  if (c < 0 || c >= 2 * u.n_modes()) throw std::out_of_range("coordinate out of range");
  int m = c / 2;
  double root = std::sqrt(u.grid->eigenvalues()[m]);
  return (c % 2 == 0) ? root * u.coeffs[m].real() : root * u.coeffs[m].imag();
}

void set_basis_coordinate(SpectralField& u, int c, double value) {
  if (c < 0 || c >= 2 * u.n_modes()) throw std::out_of_range("coordinate out of range");
  int m = c / 2;
  double inv = 1.0 / std::sqrt(u.grid->eigenvalues()[m]);
  if (c % 2 == 0)
    u.coeffs[m] = Complex(value * inv, u.coeffs[m].imag());
  else
    u.coeffs[m] = Complex(u.coeffs[m].real(), value * inv);
}

void add_basis_coordinate(SpectralField& u, int c, double delta) {
  set_basis_coordinate(u, c, basis_coordinate(u, c) + delta);
}

double quartic_integral(const SpectralField& u) {
  std::vector<Complex> phys;
  to_physical(u, phys);
  double s = 0.0;
  for (const auto& v : phys) {
    double m2 = std::norm(v);
    s += m2 * m2;
  }
  return s * u.grid->quad_weight();
}

double energy(const SpectralField& u, const EnergyParams& p) {
  return p.alpha * h1_norm_sq(u) + 0.25 * p.beta * quartic_integral(u);
}

}  // namespace cgl
