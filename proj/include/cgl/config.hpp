#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cgl/coupling.hpp"
#include "cgl/kicks.hpp"

namespace cgl {

struct ConfigViolation {
  std::string path;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string msg, std::vector<ConfigViolation> v)
      : std::runtime_error(std::move(msg)), violations(std::move(v)) {}
  std::vector<ConfigViolation> violations;
};

struct RunConfig {
  struct GridCfg {
    double length = 3.141592653589793238462643383279502884;
    int n_modes = 32;
    int n_phys = 0;  // 0 -> 4 * n_modes
  } grid;

  struct FlowCfg {
    double nu = 1.0;
    double beta = 1.0;
    double dt_max = 1e-2;
  } flow;

  struct EnergyCfg {
    bool auto_calibrate = true;
    double alpha = 0.25;
  } energy;

  struct KicksCfg {
    double b0 = 0.5;
    double decay = 1.0;
    std::string family = "uniform_symmetric";
    double scale = 1.0;
    double lambda = 1.0;
  } kicks;

  struct CouplingCfg {
    int N = 8;
    int N_prime = 8;
    double M = 25.0;
    double d = 0.5;
    int window = 200;
    int max_kicks = 500;
  } coupling;

  struct ExperimentCfg {
    int replicas = 200;
    double horizon = 50.0;
    std::vector<double> time_grid;
    std::uint64_t seed = 1;
    int threads = 0;
    double divergence_budget = 0.05;
  } experiment;

  struct OutputCfg {
    std::string dir = "out";
    int dense_modes = 4;  // J coefficient columns in dense CSV
  } output;

  GridPtr make_grid() const;
  FlowParams make_flow() const;
  KickSpec make_kicks() const;
  ClockSpec make_clock() const;
  CouplingConfig make_coupling() const;

  std::string canonical_json() const;
  std::uint64_t hash() const;  // FNV-1a of the canonical JSON
};

/// All violations collected, not just the first.
std::vector<ConfigViolation> validate(const RunConfig& cfg);

/// Parse a JSON config file; unknown keys are violations, env vars with the
/// CGL_ prefix override fields (CGL_<SECTION>_<FIELD>). Throws ConfigError
/// listing every violation.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

struct RunManifest {
  struct CheckVerdict {
    std::string name;
    bool pass = false;
    std::string detail;
  };
  std::string config_hash;
  std::string version;
  std::map<std::string, bool> suite_pass;
  std::map<std::string, std::vector<CheckVerdict>> suite_checks;
  std::vector<std::string> files;
  double wall_time_s = 0.0;
  int exit_code = 0;

  std::string to_json() const;
};

inline const char* kVersionTag = "cgl-lab 0.1.0";

}  // namespace cgl
