#pragma once

#include <complex>
#include <memory>
#include <vector>

namespace cgl {

using Complex = std::complex<double>;

/// Dirichlet interval [0, L] with the exact sine eigenbasis
/// e_j(x) = sqrt(2/L) sin(j pi x / L), eigenvalues alpha_j = (j pi / L)^2.
/// Spectral coefficients live on modes 1..n_modes; the physical grid holds
/// n_phys interior nodes x_i = i L / (n_phys + 1), enough padding that the
/// cubic nonlinearity and the quartic energy integral are alias free
/// (n_phys >= 2 n_modes).
class Grid {
 public:
  static std::shared_ptr<const Grid> make(double length, int n_modes, int n_phys = 0);

  double length() const { return length_; }
  int n_modes() const { return n_modes_; }
  int n_phys() const { return n_phys_; }
  /// Number of real coordinates in the H-orthonormal basis (re/im per mode).
  int n_coords() const { return 2 * n_modes_; }

  /// alpha_j, 1-based mode index.
  double eigenvalue(int j) const;
  const std::vector<double>& eigenvalues() const { return eigs_; }

  /// Trapezoid weight L / (n_phys + 1); exact for band-limited integrands.
  double quad_weight() const { return length_ / double(n_phys_ + 1); }
  /// Physical node x_i, 0-based i in [0, n_phys).
  double node(int i) const { return length_ * double(i + 1) / double(n_phys_ + 1); }

  const std::vector<double>& sine_fwd() const { return sine_fwd_; }  // [i*n_modes+j]
  const std::vector<double>& sine_bwd() const { return sine_bwd_; }  // [j*n_phys+i]

 private:
  Grid(double length, int n_modes, int n_phys);

  double length_;
  int n_modes_;
  int n_phys_;
  std::vector<double> eigs_;
  std::vector<double> sine_fwd_;
  std::vector<double> sine_bwd_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// State u in H as complex coefficients in the L2-normalized eigenbasis.
struct SpectralField {
  GridPtr grid;
  std::vector<Complex> coeffs;

  SpectralField() = default;
  explicit SpectralField(GridPtr g) : grid(std::move(g)), coeffs(grid->n_modes()) {}

  int n_modes() const { return int(coeffs.size()); }
};

SpectralField zero_field(const GridPtr& grid);
/// amp * e_j, 1-based mode index.
SpectralField mode_field(const GridPtr& grid, int j, Complex amp);

SpectralField operator+(const SpectralField& a, const SpectralField& b);
SpectralField operator-(const SpectralField& a, const SpectralField& b);
SpectralField operator*(double s, const SpectralField& a);

double l2_norm_sq(const SpectralField& u);
double h1_norm_sq(const SpectralField& u);
double h2_norm_sq(const SpectralField& u);
double l2_norm(const SpectralField& u);
double h1_norm(const SpectralField& u);
double h2_norm(const SpectralField& u);

double dist_h1(const SpectralField& a, const SpectralField& b);
double dist_h2(const SpectralField& a, const SpectralField& b);

/// Evaluate u at the physical nodes.
void to_physical(const SpectralField& u, std::vector<Complex>& phys);
std::vector<Complex> to_physical(const SpectralField& u);
/// Recover coefficients from physical samples (exact inverse for
/// band-limited data; higher frequencies present in `phys` are truncated).
void to_spectral(const GridPtr& grid, const std::vector<Complex>& phys, SpectralField& u);
SpectralField to_spectral(const GridPtr& grid, const std::vector<Complex>& phys);

/// Keep modes 1..N.
SpectralField project_low(const SpectralField& u, int N);
/// Keep modes N+1..n_modes.
SpectralField project_high(const SpectralField& u, int N);
/// Keep modes Np..n_modes (the L2 tail projection).
SpectralField project_high_l2(const SpectralField& u, int Np);

/// Coordinates in the H-orthonormal basis aligned with the eigenmodes,
/// interleaved re/im: coordinate 2m is sqrt(alpha_{m+1}) Re c_{m+1},
/// coordinate 2m+1 the imaginary counterpart (0-based).
double basis_coordinate(const SpectralField& u, int c);
void set_basis_coordinate(SpectralField& u, int c, double value);
void add_basis_coordinate(SpectralField& u, int c, double delta);

struct EnergyParams {
  double alpha = 0.25;
  double beta = 1.0;
};

/// H(u) = alpha ||u||_1^2 + (beta/4) \int |u|^4, quartic term on the padded grid.
double energy(const SpectralField& u, const EnergyParams& p);
/// Quartic integral \int |u|^4 alone.
double quartic_integral(const SpectralField& u);

}  // namespace cgl
