#pragma once

#include <string>
#include <vector>

#include "cgl/coupling.hpp"
#include "cgl/ergodicity.hpp"
#include "cgl/flow.hpp"
#include "cgl/kicks.hpp"

namespace cgl {

/// Round-trip exact decimal form; keeps CSV output byte-stable per seed.
std::string format_double(double v);

void write_text(const std::string& path, const std::string& text);

/// Columns: time,H,enstrophy_integral,norm_h1.
std::string flow_trace_csv(const FlowTrace& trace);

/// Events as JSON: seed, replica, kicks with (k, tau, t, norm_h1, H).
std::string trajectory_events_json(const TrajectoryLog& log);

/// Dense samples: t,norm_h1,H plus Re/Im of the first `dense_modes` coefficients.
std::string trajectory_dense_csv(const TrajectoryLog& log, const EnergyParams& e,
                                 int dense_modes);

/// Per-step coupled-run log as JSON: k, t_k, coupled, dist_h1, H(u), H(u').
std::string coupled_run_json(const std::vector<CoupledStepLog>& steps);

/// One summary row per run: replica,ell,censored,cycles,T1,T2,T3,sigma,total_steps.
std::string stopping_summary_csv(const std::vector<std::pair<EllResult, StoppingRecord>>& runs);

std::string mixing_curve_csv(const MixingReport& rep);
std::string mixing_fit_json(const MixingReport& rep);

std::string drift_table_csv(const DriftReport& rep);
std::string khasminskii_csv(const std::vector<std::pair<std::string, KhasminskiiReport>>& rows);

}  // namespace cgl
