#pragma once

// Run configuration: one structured file per run, strictly parsed (unknown
// keys are errors, every violation reported at once). The resolved config
// round-trips: serializing and re-parsing reproduces it exactly.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbmlab/common.hpp"
#include "sbmlab/grid.hpp"
#include "sbmlab/mechanism.hpp"

namespace sbmlab {

using nlohmann::json;

struct TaskParams {
  // fkpp / trend / prefactor
  std::optional<GridSpec> grid;
  double cap_multiple = 100.0;
  std::string psi_shift = "none";
  TestFunction f = TestFunction::zero();
  std::vector<double> snapshot_times;
  std::vector<double> t_list;
  double delta = 0.7;
  std::vector<double> delta_grid;
  // wave
  double wave_dx = 5e-4;
  double wave_tol = 1e-6;
  // extinction
  double t_min = 1e-3;
  double t_max = 10.0;
  double rtol = 1e-9;
  // simulation
  std::string mode;
  double t_horizon = 1.0;
  double x_level = 0.0;
  long long n_samples = 10000;
  long long n_accepted_target = 2000;
  double min_rate = 1e-5;
  int mass_scale = 100;
  int n_max_offspring = 40;
  // inequality suite
  long long n_random = 100000;
};

struct RunConfig {
  BranchingMechanism mechanism;
  std::string task;
  TaskParams params;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::set<std::string> emit = {"kv", "csv"};
  int workers = 2;
};

namespace detail_cfg {

inline void require_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where, std::vector<std::string>& errors) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      errors.push_back(where + ": unknown key '" + it.key() + "'");
  }
}

inline double need_number(const json& j, const std::string& key, const std::string& where,
                          std::vector<std::string>& errors, double fallback = 0.0) {
  if (!j.contains(key)) {
    errors.push_back(where + ": missing '" + key + "'");
    return fallback;
  }
  if (!j[key].is_number()) {
    errors.push_back(where + ": '" + key + "' must be a number");
    return fallback;
  }
  return j[key].get<double>();
}

inline BranchingMechanism parse_mechanism(const json& j, std::vector<std::string>& errors) {
  BranchingMechanism m;
  require_keys(j, {"alpha", "beta", "levy"}, "mechanism", errors);
  m.alpha = need_number(j, "alpha", "mechanism", errors, 1.0);
  m.beta = j.value("beta", 0.0);
  if (j.contains("levy")) {
    const auto& lv = j["levy"];
    const std::string type = lv.value("type", "none");
    if (type == "none") {
      require_keys(lv, {"type"}, "mechanism.levy", errors);
      m.levy = LevyNone{};
    } else if (type == "stable") {
      require_keys(lv, {"type", "theta", "scale"}, "mechanism.levy", errors);
      m.levy = LevyStable{need_number(lv, "theta", "mechanism.levy", errors, 0.5),
                          need_number(lv, "scale", "mechanism.levy", errors, 1.0)};
    } else if (type == "atoms") {
      require_keys(lv, {"type", "atoms"}, "mechanism.levy", errors);
      LevyAtoms atoms;
      if (lv.contains("atoms") && lv["atoms"].is_array()) {
        for (const auto& a : lv["atoms"]) {
          require_keys(a, {"y", "w"}, "mechanism.levy.atoms[]", errors);
          atoms.atoms.push_back({need_number(a, "y", "atom", errors, 1.0),
                                 need_number(a, "w", "atom", errors, 1.0)});
        }
      } else {
        errors.push_back("mechanism.levy: atoms type needs an 'atoms' array");
      }
      m.levy = atoms;
    } else {
      errors.push_back("mechanism.levy: unknown type '" + type + "'");
    }
  }
  return m;
}

inline GridSpec parse_grid(const json& j, std::vector<std::string>& errors) {
  GridSpec g;
  require_keys(j, {"x_min", "x_max", "dx", "dt", "t_max", "moving_window"}, "grid", errors);
  g.x_min = need_number(j, "x_min", "grid", errors, -20.0);
  g.x_max = need_number(j, "x_max", "grid", errors, 20.0);
  g.dx = need_number(j, "dx", "grid", errors, 0.01);
  g.dt = need_number(j, "dt", "grid", errors, 0.005);
  g.t_max = need_number(j, "t_max", "grid", errors, 1.0);
  g.moving_window = j.value("moving_window", false);
  return g;
}

inline TestFunction parse_test_function(const json& j, std::vector<std::string>& errors) {
  const std::string kind = j.value("kind", "zero");
  if (kind == "zero") {
    require_keys(j, {"kind"}, "f", errors);
    return TestFunction::zero();
  }
  if (kind == "step") {
    require_keys(j, {"kind", "height", "a", "b"}, "f", errors);
    TestFunction f;
    f.kind = TestFunction::Kind::step;
    f.height = need_number(j, "height", "f", errors, 1.0);
    f.a = need_number(j, "a", "f", errors, -1.0);
    f.b = need_number(j, "b", "f", errors, 0.0);
    return f;
  }
  if (kind == "table") {
    require_keys(j, {"kind", "left", "samples"}, "f", errors);
    TestFunction f;
    f.kind = TestFunction::Kind::table;
    f.table_left = need_number(j, "left", "f", errors, -1.0);
    if (j.contains("samples") && j["samples"].is_array())
      for (const auto& s : j["samples"]) f.samples.push_back(s.get<double>());
    return f;
  }
  errors.push_back("f: unknown kind '" + kind + "'");
  return TestFunction::zero();
}

}  // namespace detail_cfg

inline const std::set<std::string>& known_tasks() {
  static const std::set<std::string> tasks = {
      "derive",          "solve-fkpp",      "wave",        "extinction",
      "simulate-skeleton", "simulate-sbm",  "rates",       "prefactor",
      "trend",           "inequality-suite", "full-report"};
  return tasks;
}

inline RunConfig parse_config(const json& root) {
  std::vector<std::string> errors;
  detail_cfg::require_keys(root,
                           {"mechanism", "task", "params", "seed", "output_dir", "emit",
                            "workers"},
                           "config", errors);
  RunConfig cfg;
  if (root.contains("mechanism")) {
    cfg.mechanism = detail_cfg::parse_mechanism(root["mechanism"], errors);
  } else {
    errors.push_back("config: missing 'mechanism'");
  }
  cfg.task = root.value("task", "");
  if (!known_tasks().count(cfg.task)) errors.push_back("config: unknown task '" + cfg.task + "'");
  cfg.seed = root.value("seed", 1ull);
  cfg.output_dir = root.value("output_dir", "out");
  cfg.workers = root.value("workers", 2);
  if (root.contains("emit")) {
    cfg.emit.clear();
    for (const auto& e : root["emit"]) {
      const std::string v = e.get<std::string>();
      if (v != "kv" && v != "csv" && v != "raw-samples")
        errors.push_back("config: emit entry '" + v + "' not one of kv|csv|raw-samples");
      cfg.emit.insert(v);
    }
  }
  if (root.contains("params")) {
    const auto& p = root["params"];
    detail_cfg::require_keys(
        p,
        {"grid", "cap_multiple", "psi_shift", "f", "snapshot_times", "t_list", "delta",
         "delta_grid", "wave_dx", "wave_tol", "t_min", "t_max", "rtol", "mode", "t_horizon",
         "x_level", "n_samples", "n_accepted_target", "min_rate", "mass_scale",
         "n_max_offspring", "n_random"},
        "params", errors);
    auto& o = cfg.params;
    if (p.contains("grid")) o.grid = detail_cfg::parse_grid(p["grid"], errors);
    o.cap_multiple = p.value("cap_multiple", o.cap_multiple);
    o.psi_shift = p.value("psi_shift", o.psi_shift);
    if (o.psi_shift != "none" && o.psi_shift != "lambda_star")
      errors.push_back("params.psi_shift must be none|lambda_star");
    if (p.contains("f")) o.f = detail_cfg::parse_test_function(p["f"], errors);
    if (p.contains("snapshot_times"))
      for (const auto& t : p["snapshot_times"]) o.snapshot_times.push_back(t.get<double>());
    if (p.contains("t_list"))
      for (const auto& t : p["t_list"]) o.t_list.push_back(t.get<double>());
    o.delta = p.value("delta", o.delta);
    if (p.contains("delta_grid"))
      for (const auto& d : p["delta_grid"]) o.delta_grid.push_back(d.get<double>());
    o.wave_dx = p.value("wave_dx", o.wave_dx);
    o.wave_tol = p.value("wave_tol", o.wave_tol);
    o.t_min = p.value("t_min", o.t_min);
    o.t_max = p.value("t_max", o.t_max);
    o.rtol = p.value("rtol", o.rtol);
    o.mode = p.value("mode", o.mode);
    o.t_horizon = p.value("t_horizon", o.t_horizon);
    o.x_level = p.value("x_level", o.x_level);
    o.n_samples = p.value("n_samples", o.n_samples);
    o.n_accepted_target = p.value("n_accepted_target", o.n_accepted_target);
    o.min_rate = p.value("min_rate", o.min_rate);
    o.mass_scale = p.value("mass_scale", o.mass_scale);
    o.n_max_offspring = p.value("n_max_offspring", o.n_max_offspring);
    o.n_random = p.value("n_random", o.n_random);
  }
  if (!errors.empty()) {
    std::string all = "config validation failed:";
    for (const auto& e : errors) all += "\n  - " + e;
    throw ValidationError(all);
  }
  cfg.mechanism.validate();
  return cfg;
}

inline json mechanism_to_json(const BranchingMechanism& m) {
  json j;
  j["alpha"] = m.alpha;
  j["beta"] = m.beta;
  if (std::holds_alternative<LevyNone>(m.levy)) {
    j["levy"] = {{"type", "none"}};
  } else if (const auto* s = std::get_if<LevyStable>(&m.levy)) {
    j["levy"] = {{"type", "stable"}, {"theta", s->theta}, {"scale", s->scale}};
  } else if (const auto* a = std::get_if<LevyAtoms>(&m.levy)) {
    json atoms = json::array();
    for (const auto& at : a->atoms) atoms.push_back({{"y", at.y}, {"w", at.w}});
    j["levy"] = {{"type", "atoms"}, {"atoms", atoms}};
  }
  return j;
}

// Serialize the fully resolved config; parse_config applied to the result
// reproduces the same resolved state (round-trip contract).
inline json resolved_config_json(const RunConfig& cfg) {
  json j;
  j["mechanism"] = mechanism_to_json(cfg.mechanism);
  j["task"] = cfg.task;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["workers"] = cfg.workers;
  j["emit"] = json::array();
  for (const auto& e : cfg.emit) j["emit"].push_back(e);
  json p;
  if (cfg.params.grid) {
    const auto& g = *cfg.params.grid;
    p["grid"] = {{"x_min", g.x_min}, {"x_max", g.x_max},           {"dx", g.dx},
                 {"dt", g.dt},       {"t_max", g.t_max},           {"moving_window", g.moving_window}};
  }
  p["cap_multiple"] = cfg.params.cap_multiple;
  p["psi_shift"] = cfg.params.psi_shift;
  switch (cfg.params.f.kind) {
    case TestFunction::Kind::zero: p["f"] = {{"kind", "zero"}}; break;
    case TestFunction::Kind::step:
      p["f"] = {{"kind", "step"},
                {"height", cfg.params.f.height},
                {"a", cfg.params.f.a},
                {"b", cfg.params.f.b}};
      break;
    case TestFunction::Kind::table:
      p["f"] = {{"kind", "table"}, {"left", cfg.params.f.table_left},
                {"samples", cfg.params.f.samples}};
      break;
  }
  p["snapshot_times"] = cfg.params.snapshot_times;
  p["t_list"] = cfg.params.t_list;
  p["delta"] = cfg.params.delta;
  p["delta_grid"] = cfg.params.delta_grid;
  p["wave_dx"] = cfg.params.wave_dx;
  p["wave_tol"] = cfg.params.wave_tol;
  p["t_min"] = cfg.params.t_min;
  p["t_max"] = cfg.params.t_max;
  p["rtol"] = cfg.params.rtol;
  p["mode"] = cfg.params.mode;
  p["t_horizon"] = cfg.params.t_horizon;
  p["x_level"] = cfg.params.x_level;
  p["n_samples"] = cfg.params.n_samples;
  p["n_accepted_target"] = cfg.params.n_accepted_target;
  p["min_rate"] = cfg.params.min_rate;
  p["mass_scale"] = cfg.params.mass_scale;
  p["n_max_offspring"] = cfg.params.n_max_offspring;
  p["n_random"] = cfg.params.n_random;
  j["params"] = p;
  return j;
}

}  // namespace sbmlab
