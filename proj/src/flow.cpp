#include "cgl/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cgl {

int FlowParams::substeps(double t) const {
  if (t <= 0.0) return 1;
  return std::max(1, int(std::ceil(t / dt_max)));
}

static void check_time(double t) {
  if (t < 0.0 || !std::isfinite(t)) throw std::invalid_argument("negative or non-finite time");
}

static void apply_heat(SpectralField& u, double t, double nu) {
  const auto& eig = u.grid->eigenvalues();
  for (std::size_t j = 0; j < u.coeffs.size(); ++j)
    u.coeffs[j] *= std::exp(-nu * eig[j] * t);
}

SpectralField heat_substep(const SpectralField& u, double t, const FlowParams& p) {
  check_time(t);
  SpectralField r = u;
  apply_heat(r, t, p.nu);
  return r;
}

static void apply_phase(SpectralField& u, double t, double beta,
                        std::vector<Complex>& phys) {
  if (beta * t == 0.0) return;
  to_physical(u, phys);
  for (auto& v : phys) {
    double angle = -beta * std::norm(v) * t;
    v *= Complex(std::cos(angle), std::sin(angle));
  }
  to_spectral(u.grid, phys, u);
}

SpectralField phase_substep(const SpectralField& u, double t, const FlowParams& p) {
  check_time(t);
  SpectralField r = u;
  std::vector<Complex> phys;
  apply_phase(r, t, p.beta, phys);
  return r;
}

static void check_sane(const SpectralField& u, double t_reached, const FlowParams& p) {
  double n = h1_norm_sq(u);
  if (!std::isfinite(n) || n > p.blowup_h1 * p.blowup_h1)
    throw DivergenceError(t_reached, std::sqrt(n));
}

static std::vector<double> half_step_factors(const SpectralField& u, double h, double nu) {
  const auto& eig = u.grid->eigenvalues();
  std::vector<double> f(eig.size());
  for (std::size_t j = 0; j < eig.size(); ++j) f[j] = std::exp(-nu * eig[j] * 0.5 * h);
  return f;
}

SpectralField evolve(const SpectralField& u, double t, const FlowParams& p) {
  check_time(t);
  if (t == 0.0) return u;
  if (p.beta == 0.0) return heat_substep(u, t, p);
  const int m = p.substeps(t);
  const double h = t / double(m);
  SpectralField r = u;
  const std::vector<double> half = half_step_factors(r, h, p.nu);
  std::vector<Complex> phys;
  for (int k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < r.coeffs.size(); ++j) r.coeffs[j] *= half[j];
    apply_phase(r, h, p.beta, phys);
    for (std::size_t j = 0; j < r.coeffs.size(); ++j) r.coeffs[j] *= half[j];
    check_sane(r, h * double(k + 1), p);
  }
  return r;
}

SpectralField tangent_evolve(const SpectralField& u, const SpectralField& delta,
                             double t, const FlowParams& p) {
  check_time(t);
  const int m = p.substeps(t);
  const double h = t / double(m);
  SpectralField base = u;
  SpectralField tan = delta;
  std::vector<Complex> phys, dphys;
  for (int k = 0; k < m; ++k) {
    apply_heat(base, 0.5 * h, p.nu);
    apply_heat(tan, 0.5 * h, p.nu);
    if (p.beta * h != 0.0) {
      to_physical(base, phys);
      to_physical(tan, dphys);
      for (std::size_t i = 0; i < phys.size(); ++i) {
        Complex v = phys[i];
        Complex d = dphys[i];
        double angle = -p.beta * std::norm(v) * h;
        Complex rot(std::cos(angle), std::sin(angle));
        // d/dv [v e^{-i beta |v|^2 h}] applied to d
        Complex dmod = std::conj(v) * d + v * std::conj(d);  // real-valued as complex
        phys[i] = v * rot;
        dphys[i] = rot * (d - Complex(0.0, p.beta * h) * v * dmod);
      }
      to_spectral(base.grid, phys, base);
      to_spectral(tan.grid, dphys, tan);
    }
    apply_heat(base, 0.5 * h, p.nu);
    apply_heat(tan, 0.5 * h, p.nu);
  }
  return tan;
}

SpectralField evolve_traced(const SpectralField& u, double t, const FlowParams& p,
                            const EnergyParams& e, FlowTrace& trace) {
  check_time(t);
  const int m = p.substeps(t);
  const double h = t / double(m);
  SpectralField r = u;
  const std::vector<double> half = half_step_factors(r, h, p.nu);
  const auto& eig = r.grid->eigenvalues();
  std::vector<Complex> phys;
  double ens = trace.enstrophy_integral.empty() ? 0.0 : trace.enstrophy_integral.back();
  double t0 = trace.time.empty() ? 0.0 : trace.time.back();
  if (trace.time.empty()) {
    trace.time.push_back(0.0);
    trace.energy.push_back(energy(r, e));
    trace.enstrophy_integral.push_back(0.0);
    trace.norm_h1.push_back(h1_norm(r));
  }
  // int ||Lap u||^2 over a heat half-step, per-mode closed form.
  auto half_heat_enstrophy = [&](const SpectralField& s) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.coeffs.size(); ++j)
      acc += eig[j] * std::norm(s.coeffs[j]) * (1.0 - half[j] * half[j]) * 0.5 / p.nu;
    return acc;
  };
  for (int k = 0; k < m; ++k) {
    ens += half_heat_enstrophy(r);
    for (std::size_t j = 0; j < r.coeffs.size(); ++j) r.coeffs[j] *= half[j];
    apply_phase(r, h, p.beta, phys);
    ens += half_heat_enstrophy(r);
    for (std::size_t j = 0; j < r.coeffs.size(); ++j) r.coeffs[j] *= half[j];
    check_sane(r, t0 + h * double(k + 1), p);
    trace.time.push_back(t0 + h * double(k + 1));
    trace.energy.push_back(energy(r, e));
    trace.enstrophy_integral.push_back(ens);
    trace.norm_h1.push_back(h1_norm(r));
  }
  return r;
}

Calibration calibrate_alpha(const FlowParams& p,
                            const std::vector<SpectralField>& trial_states,
                            const CalibrateOptions& opts) {
  if (trial_states.empty()) throw std::invalid_argument("calibrate_alpha: no trial states");
  for (double alpha = opts.alpha0; alpha >= opts.alpha_min; alpha *= 0.5) {
    EnergyParams e{alpha, opts.beta};
    double min_rate = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (const auto& u0 : trial_states) {
      double h0 = energy(u0, e);
      if (h0 <= 0.0) continue;  // zero state passes trivially
      SpectralField u = u0;
      double prev = h0;
      const double dt = opts.horizon / double(opts.n_samples);
      for (int i = 1; i <= opts.n_samples && ok; ++i) {
        u = evolve(u, dt, p);
        double hcur = energy(u, e);
        if (hcur > prev * (1.0 + 1e-12)) {
          ok = false;
          break;
        }
        double rate = -std::log(hcur / h0) / (dt * double(i));
        min_rate = std::min(min_rate, rate);
        prev = hcur;
      }
      if (!ok) break;
    }
    if (ok && min_rate > 0.0 && std::isfinite(min_rate)) {
      Calibration cal;
      cal.energy = EnergyParams{alpha, opts.beta};
      cal.decay_rate = opts.margin * min_rate;
      cal.halvings = int(std::round(std::log2(opts.alpha0 / alpha)));
      return cal;
    }
  }
  throw CalibrationError("calibrate_alpha: halving schedule exhausted");
}

BudgetReport enstrophy_budget_check(const SpectralField& u0, double t,
                                    const FlowParams& p, const EnergyParams& e) {
  check_time(t);
  BudgetReport rep;
  rep.rhs = energy(u0, e);
  FlowTrace trace;
  evolve_traced(u0, t, p, e, trace);
  rep.lhs = e.alpha * p.nu * trace.enstrophy_integral.back();
  return rep;
}

std::vector<double> smoothing_probe(const SpectralField& u, const SpectralField& v,
                                    const std::vector<double>& t_list,
                                    const FlowParams& p) {
  double d1 = dist_h1(u, v);
  if (d1 == 0.0) throw std::invalid_argument("smoothing_probe: u == v");
  std::vector<double> out;
  out.reserve(t_list.size());
  for (double t : t_list) {
    if (t <= 0.0) throw std::invalid_argument("smoothing_probe: t must be positive");
    SpectralField su = evolve(u, t, p);
    SpectralField sv = evolve(v, t, p);
    out.push_back(std::sqrt(t) * dist_h2(su, sv) / d1);
  }
  return out;
}

double lipschitz_probe(const SpectralField& u, const SpectralField& v, double t,
                       const FlowParams& p) {
  double d1 = dist_h1(u, v);
  if (d1 == 0.0) throw std::invalid_argument("lipschitz_probe: u == v");
  SpectralField su = evolve(u, t, p);
  SpectralField sv = evolve(v, t, p);
  return dist_h1(su, sv) / d1;
}

}  // namespace cgl
