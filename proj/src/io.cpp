#include "cgl/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cgl {

using json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string flow_trace_csv(const FlowTrace& trace) {
  std::ostringstream os;
  os << "time,H,enstrophy_integral,norm_h1\n";
  for (std::size_t i = 0; i < trace.time.size(); ++i)
    os << format_double(trace.time[i]) << ',' << format_double(trace.energy[i]) << ','
       << format_double(trace.enstrophy_integral[i]) << ','
       << format_double(trace.norm_h1[i]) << '\n';
  return os.str();
}

std::string trajectory_events_json(const TrajectoryLog& log) {
  json j;
  j["seed"] = log.seed;
  j["replica"] = log.replica;
  j["horizon"] = log.horizon;
  j["diverged"] = log.diverged;
  if (log.diverged) j["diverged_at"] = log.diverged_at;
  json kicks = json::array();
  for (std::size_t k = 0; k < log.kick_times.size(); ++k) {
    kicks.push_back({{"k", k + 1},
                     {"tau", log.kick_times[k]},
                     {"t", log.waits[k]},
                     {"norm_h1", log.h1_at_kicks[k]},
                     {"H", log.energy_at_kicks[k]}});
  }
  j["kicks"] = kicks;
  return j.dump(2);
}

std::string trajectory_dense_csv(const TrajectoryLog& log, const EnergyParams& e,
                                 int dense_modes) {
  std::ostringstream os;
  os << "t,norm_h1,H";
  for (int m = 1; m <= dense_modes; ++m) os << ",re_c" << m << ",im_c" << m;
  os << '\n';
  for (const auto& s : log.samples) {
    os << format_double(s.t) << ',' << format_double(h1_norm(s.state)) << ','
       << format_double(energy(s.state, e));
    for (int m = 0; m < dense_modes; ++m)
      os << ',' << format_double(s.state.coeffs[m].real()) << ','
         << format_double(s.state.coeffs[m].imag());
    os << '\n';
  }
  return os.str();
}

std::string coupled_run_json(const std::vector<CoupledStepLog>& steps) {
  json arr = json::array();
  for (const auto& s : steps)
    arr.push_back({{"k", s.k},
                   {"t", s.t},
                   {"coupled", s.coupled},
                   {"dist_h1", s.dist_h1},
                   {"H_u", s.h_u},
                   {"H_u_prime", s.h_up}});
  return arr.dump(2);
}

static std::string opt_str(const std::optional<int>& v) {
  return v ? std::to_string(*v) : "inf";
}

std::string stopping_summary_csv(
    const std::vector<std::pair<EllResult, StoppingRecord>>& runs) {
  std::ostringstream os;
  os << "replica,ell,censored,cycles,T1,T2,T3,sigma,total_steps\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& [ell, rec] = runs[i];
    os << i << ',' << (ell.ell ? std::to_string(*ell.ell) : "unresolved") << ','
       << (ell.censored ? 1 : 0) << ',' << ell.cycles << ',' << opt_str(rec.T1) << ','
       << opt_str(rec.T2) << ',' << opt_str(rec.T3) << ',' << opt_str(rec.sigma) << ','
       << ell.total_steps << '\n';
  }
  return os.str();
}

std::string mixing_curve_csv(const MixingReport& rep) {
  std::ostringstream os;
  os << "t,lower_bound,ci_lo,ci_hi\n";
  for (const auto& pt : rep.curve)
    os << format_double(pt.t) << ',' << format_double(pt.lb) << ','
       << format_double(pt.ci_lo) << ',' << format_double(pt.ci_hi) << '\n';
  return os.str();
}

std::string mixing_fit_json(const MixingReport& rep) {
  json j;
  j["threshold"] = rep.threshold;
  j["first_below"] = rep.first_below;
  j["median_nonincreasing"] = rep.median_nonincreasing;
  j["divergence_rate"] = rep.divergence_rate;
  j["valid"] = rep.valid;
  j["exp_fit"] = {{"rate", rep.exp_fit.c},
                  {"log_prefactor", rep.exp_fit.log_pref},
                  {"rss", rep.exp_fit.rss},
                  {"aic", rep.exp_fit.aic}};
  j["pow_fit"] = {{"exponent", rep.pow_fit.c},
                  {"log_prefactor", rep.pow_fit.log_pref},
                  {"rss", rep.pow_fit.rss},
                  {"aic", rep.pow_fit.aic}};
  return j.dump(2);
}

std::string drift_table_csv(const DriftReport& rep) {
  std::ostringstream os;
  os << "H0,norm0,mean_F,ratio\n";
  for (const auto& pt : rep.points)
    os << format_double(pt.h0) << ',' << format_double(pt.norm0) << ','
       << format_double(pt.mean_F) << ',' << format_double(pt.ratio) << '\n';
  return os.str();
}

std::string khasminskii_csv(
    const std::vector<std::pair<std::string, KhasminskiiReport>>& rows) {
  std::ostringstream os;
  os << "functional,lhs,lhs_lo,lhs_hi,rhs,rhs_lo,rhs_hi,mean_tau,overlap\n";
  for (const auto& [name, r] : rows)
    os << name << ',' << format_double(r.lhs) << ',' << format_double(r.lhs_lo) << ','
       << format_double(r.lhs_hi) << ',' << format_double(r.rhs) << ','
       << format_double(r.rhs_lo) << ',' << format_double(r.rhs_hi) << ','
       << format_double(r.mean_tau) << ',' << (r.overlap ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace cgl
