#include "cgl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cgl {

using json = nlohmann::ordered_json;

GridPtr RunConfig::make_grid() const {
  return Grid::make(grid.length, grid.n_modes, grid.n_phys);
}

FlowParams RunConfig::make_flow() const {
  FlowParams p;
  p.nu = flow.nu;
  p.beta = flow.beta;
  p.dt_max = flow.dt_max;
  return p;
}

KickSpec RunConfig::make_kicks() const {
  return KickSpec::power_law(2 * grid.n_modes, kicks.b0, kicks.decay,
                             DensityFamily::parse(kicks.family, kicks.scale));
}

ClockSpec RunConfig::make_clock() const { return ClockSpec{kicks.lambda}; }

CouplingConfig RunConfig::make_coupling() const {
  CouplingConfig c;
  c.N = coupling.N;
  c.N_prime = coupling.N_prime;
  c.M = coupling.M;
  c.d = coupling.d;
  c.window = coupling.window;
  c.max_kicks = coupling.max_kicks;
  return c;
}

static json to_json(const RunConfig& c) {
  json j;
  j["grid"] = {{"length", c.grid.length},
               {"n_modes", c.grid.n_modes},
               {"n_phys", c.grid.n_phys}};
  j["flow"] = {{"nu", c.flow.nu}, {"beta", c.flow.beta}, {"dt_max", c.flow.dt_max}};
  if (c.energy.auto_calibrate)
    j["energy"] = {{"alpha", "auto"}};
  else
    j["energy"] = {{"alpha", c.energy.alpha}};
  j["kicks"] = {{"b0", c.kicks.b0},
                {"decay", c.kicks.decay},
                {"family", c.kicks.family},
                {"scale", c.kicks.scale},
                {"lambda", c.kicks.lambda}};
  j["coupling"] = {{"N", c.coupling.N},         {"N_prime", c.coupling.N_prime},
                   {"M", c.coupling.M},         {"d", c.coupling.d},
                   {"window", c.coupling.window}, {"max_kicks", c.coupling.max_kicks}};
  j["experiment"] = {{"replicas", c.experiment.replicas},
                     {"horizon", c.experiment.horizon},
                     {"time_grid", c.experiment.time_grid},
                     {"seed", c.experiment.seed},
                     {"threads", c.experiment.threads},
                     {"divergence_budget", c.experiment.divergence_budget}};
  j["output"] = {{"dir", c.output.dir}, {"dense_modes", c.output.dense_modes}};
  return j;
}

std::string RunConfig::canonical_json() const { return to_json(*this).dump(2); }

std::uint64_t RunConfig::hash() const {
  std::string s = canonical_json();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<ConfigViolation> validate(const RunConfig& c) {
  std::vector<ConfigViolation> v;
  auto bad = [&](const std::string& path, const std::string& msg) {
    v.push_back({path, msg});
  };
  if (!(c.grid.length > 0.0)) bad("grid.length", "must be positive");
  if (c.grid.n_modes < 4) bad("grid.n_modes", "must be >= 4");
  if (c.grid.n_phys != 0 && c.grid.n_phys < 2 * c.grid.n_modes)
    bad("grid.n_phys", "must be 0 (auto) or >= 2*n_modes");
  if (!(c.flow.nu > 0.0)) bad("flow.nu", "must be positive");
  if (!(c.flow.beta >= 0.0)) bad("flow.beta", "must be nonnegative");
  if (!(c.flow.dt_max > 0.0)) bad("flow.dt_max", "must be positive");
  if (!c.energy.auto_calibrate && !(c.energy.alpha > 0.0))
    bad("energy.alpha", "must be positive or \"auto\"");
  if (c.kicks.b0 < 0.0) bad("kicks.b0", "must be nonnegative");
  if (!(c.kicks.scale > 0.0)) bad("kicks.scale", "must be positive");
  if (!(c.kicks.lambda > 0.0)) bad("kicks.lambda", "must be positive");
  if (c.kicks.family != "uniform_symmetric" && c.kicks.family != "triangular" &&
      c.kicks.family != "truncated_gaussian")
    bad("kicks.family", "unknown family tag");
  if (c.coupling.N < 1 || c.coupling.N >= c.grid.n_modes)
    bad("coupling.N", "need 1 <= N < n_modes");
  if (c.coupling.N_prime < 1 || c.coupling.N_prime > c.coupling.N)
    bad("coupling.N_prime", "need 1 <= N' <= N");
  if (!(c.coupling.M > 0.0)) bad("coupling.M", "must be positive");
  if (!(c.coupling.d > 0.0 && c.coupling.d <= 1.0)) bad("coupling.d", "must be in (0, 1]");
  if (c.coupling.window < 1) bad("coupling.window", "must be >= 1");
  if (c.coupling.max_kicks < 1) bad("coupling.max_kicks", "must be >= 1");
  if (c.kicks.b0 == 0.0) bad("kicks.b0", "coupling requires b_j != 0 on coupled coordinates");
  if (c.experiment.replicas < 1) bad("experiment.replicas", "must be >= 1");
  if (!(c.experiment.horizon > 0.0)) bad("experiment.horizon", "must be positive");
  for (std::size_t i = 0; i < c.experiment.time_grid.size(); ++i) {
    double t = c.experiment.time_grid[i];
    if (t < 0.0 || t > c.experiment.horizon) {
      bad("experiment.time_grid", "entries must lie in [0, horizon]");
      break;
    }
    if (i > 0 && t <= c.experiment.time_grid[i - 1]) {
      bad("experiment.time_grid", "must be strictly increasing");
      break;
    }
  }
  if (c.experiment.threads < 0) bad("experiment.threads", "must be >= 0");
  if (!(c.experiment.divergence_budget >= 0.0 && c.experiment.divergence_budget <= 1.0))
    bad("experiment.divergence_budget", "must be in [0, 1]");
  if (c.output.dense_modes < 0 || c.output.dense_modes > c.grid.n_modes)
    bad("output.dense_modes", "must be in [0, n_modes]");
  return v;
}

namespace {

template <typename T>
void read_field(const json& j, const char* section, const char* key, T& out,
                std::vector<ConfigViolation>& v) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    v.push_back({std::string(section) + "." + key, "wrong type"});
  }
}

void check_unknown(const json& j, const char* section,
                   const std::vector<std::string>& known,
                   std::vector<ConfigViolation>& v) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : known) ok = ok || (it.key() == k);
    if (!ok) v.push_back({std::string(section) + "." + it.key(), "unknown field"});
  }
}

void apply_env_overrides(RunConfig& c, std::vector<ConfigViolation>& v) {
  auto get = [](const char* name) -> const char* { return std::getenv(name); };
  auto as_double = [&](const char* name, double& out) {
    if (const char* s = get(name)) {
      try {
        out = std::stod(s);
      } catch (...) {
        v.push_back({name, "env override not a number"});
      }
    }
  };
  auto as_int = [&](const char* name, int& out) {
    if (const char* s = get(name)) {
      try {
        out = std::stoi(s);
      } catch (...) {
        v.push_back({name, "env override not an integer"});
      }
    }
  };
  as_double("CGL_GRID_LENGTH", c.grid.length);
  as_int("CGL_GRID_N_MODES", c.grid.n_modes);
  as_int("CGL_GRID_N_PHYS", c.grid.n_phys);
  as_double("CGL_FLOW_NU", c.flow.nu);
  as_double("CGL_FLOW_BETA", c.flow.beta);
  as_double("CGL_FLOW_DT_MAX", c.flow.dt_max);
  as_double("CGL_KICKS_B0", c.kicks.b0);
  as_double("CGL_KICKS_DECAY", c.kicks.decay);
  as_double("CGL_KICKS_SCALE", c.kicks.scale);
  as_double("CGL_KICKS_LAMBDA", c.kicks.lambda);
  if (const char* s = get("CGL_KICKS_FAMILY")) c.kicks.family = s;
  as_int("CGL_COUPLING_N", c.coupling.N);
  as_int("CGL_COUPLING_N_PRIME", c.coupling.N_prime);
  as_double("CGL_COUPLING_M", c.coupling.M);
  as_double("CGL_COUPLING_D", c.coupling.d);
  as_int("CGL_COUPLING_WINDOW", c.coupling.window);
  as_int("CGL_COUPLING_MAX_KICKS", c.coupling.max_kicks);
  as_int("CGL_EXPERIMENT_REPLICAS", c.experiment.replicas);
  as_double("CGL_EXPERIMENT_HORIZON", c.experiment.horizon);
  as_int("CGL_EXPERIMENT_THREADS", c.experiment.threads);
  if (const char* s = get("CGL_EXPERIMENT_SEED")) {
    try {
      c.experiment.seed = std::stoull(s);
    } catch (...) {
      v.push_back({"CGL_EXPERIMENT_SEED", "env override not an integer"});
    }
  }
  if (const char* s = get("CGL_OUTPUT_DIR")) c.output.dir = s;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  std::vector<ConfigViolation> v;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config: invalid JSON: ") + ex.what(), {});
  }
  RunConfig c;
  check_unknown(j, "", {"grid", "flow", "energy", "kicks", "coupling", "experiment", "output"},
                v);
  if (j.contains("grid")) {
    const auto& s = j["grid"];
    check_unknown(s, "grid", {"length", "n_modes", "n_phys"}, v);
    read_field(s, "grid", "length", c.grid.length, v);
    read_field(s, "grid", "n_modes", c.grid.n_modes, v);
    read_field(s, "grid", "n_phys", c.grid.n_phys, v);
  }
  if (j.contains("flow")) {
    const auto& s = j["flow"];
    check_unknown(s, "flow", {"nu", "beta", "dt_max"}, v);
    read_field(s, "flow", "nu", c.flow.nu, v);
    read_field(s, "flow", "beta", c.flow.beta, v);
    read_field(s, "flow", "dt_max", c.flow.dt_max, v);
  }
  if (j.contains("energy")) {
    const auto& s = j["energy"];
    check_unknown(s, "energy", {"alpha"}, v);
    if (s.contains("alpha")) {
      if (s["alpha"].is_string()) {
        if (s["alpha"].get<std::string>() != "auto")
          v.push_back({"energy.alpha", "must be a number or \"auto\""});
        c.energy.auto_calibrate = true;
      } else if (s["alpha"].is_number()) {
        c.energy.auto_calibrate = false;
        c.energy.alpha = s["alpha"].get<double>();
      } else {
        v.push_back({"energy.alpha", "must be a number or \"auto\""});
      }
    }
  }
  if (j.contains("kicks")) {
    const auto& s = j["kicks"];
    check_unknown(s, "kicks", {"b0", "decay", "family", "scale", "lambda"}, v);
    read_field(s, "kicks", "b0", c.kicks.b0, v);
    read_field(s, "kicks", "decay", c.kicks.decay, v);
    read_field(s, "kicks", "family", c.kicks.family, v);
    read_field(s, "kicks", "scale", c.kicks.scale, v);
    read_field(s, "kicks", "lambda", c.kicks.lambda, v);
  }
  if (j.contains("coupling")) {
    const auto& s = j["coupling"];
    check_unknown(s, "coupling", {"N", "N_prime", "M", "d", "window", "max_kicks"}, v);
    read_field(s, "coupling", "N", c.coupling.N, v);
    read_field(s, "coupling", "N_prime", c.coupling.N_prime, v);
    read_field(s, "coupling", "M", c.coupling.M, v);
    read_field(s, "coupling", "d", c.coupling.d, v);
    read_field(s, "coupling", "window", c.coupling.window, v);
    read_field(s, "coupling", "max_kicks", c.coupling.max_kicks, v);
  }
  if (j.contains("experiment")) {
    const auto& s = j["experiment"];
    check_unknown(s, "experiment",
                  {"replicas", "horizon", "time_grid", "seed", "threads",
                   "divergence_budget"},
                  v);
    read_field(s, "experiment", "replicas", c.experiment.replicas, v);
    read_field(s, "experiment", "horizon", c.experiment.horizon, v);
    read_field(s, "experiment", "time_grid", c.experiment.time_grid, v);
    read_field(s, "experiment", "seed", c.experiment.seed, v);
    read_field(s, "experiment", "threads", c.experiment.threads, v);
    read_field(s, "experiment", "divergence_budget", c.experiment.divergence_budget, v);
  }
  if (j.contains("output")) {
    const auto& s = j["output"];
    check_unknown(s, "output", {"dir", "dense_modes"}, v);
    read_field(s, "output", "dir", c.output.dir, v);
    read_field(s, "output", "dense_modes", c.output.dense_modes, v);
  }
  apply_env_overrides(c, v);
  auto more = validate(c);
  v.insert(v.end(), more.begin(), more.end());
  if (!v.empty()) {
    std::ostringstream msg;
    msg << "config: " << v.size() << " violation(s):";
    for (const auto& viol : v) msg << "\n  " << viol.path << ": " << viol.message;
    throw ConfigError(msg.str(), v);
  }
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path, {{path, "missing file"}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string RunManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["version"] = version;
  json suites = json::object();
  for (const auto& [name, pass] : suite_pass) {
    json s;
    s["pass"] = pass;
    json checks = json::array();
    auto it = suite_checks.find(name);
    if (it != suite_checks.end())
      for (const auto& c : it->second)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    s["checks"] = checks;
    suites[name] = s;
  }
  j["suites"] = suites;
  j["files"] = files;
  j["wall_time_s"] = wall_time_s;
  j["exit_code"] = exit_code;
  return j.dump(2);
}

}  // namespace cgl
