#pragma once

// Experiment configuration: a JSON document with sections grid, operator,
// problem, time, solver, suite, output, seed. Unknown keys are rejected at
// every level so a typo cannot silently fall back to a default, and the
// effective (defaults-filled) document is echoed into every output file.
// Seeds are mandatory whenever the suite contains a randomized check; no
// entropy is ever drawn from ambient sources.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpme/backend.hpp"
#include "fpme/evolution.hpp"
#include "fpme/grid.hpp"
#include "fpme/io.hpp"

namespace fpme {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::string& where,
                                const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (allowed.find(key) == allowed.end())
      throw ConfigError("config: unknown key '" + key + "' in " + where);
}

inline double need_number(const nlohmann::json& obj, const std::string& where,
                          const std::string& key) {
  if (!obj.contains(key)) throw ConfigError("config: missing '" + key + "' in " + where);
  if (!obj.at(key).is_number())
    throw ConfigError("config: '" + key + "' in " + where + " must be a number");
  return obj.at(key).get<double>();
}

inline double number_or(const nlohmann::json& obj, const std::string& where,
                        const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number())
    throw ConfigError("config: '" + key + "' in " + where + " must be a number");
  return obj.at(key).get<double>();
}

}  // namespace detail

struct SuiteCheck {
  std::string name;
  std::optional<double> tolerance;  // absent = the check's documented default
};

// checks whose result depends on drawn samples; these demand an explicit seed
inline bool check_is_randomized(const std::string& name) {
  return name == "contraction-battery" ||
         name == "two-point-inequality-and-convolution-identity";
}

inline const std::set<std::string>& known_suite_checks() {
  static const std::set<std::string> names = {
      "mass-conservation",
      "convex-decay",
      "retention",
      "fast-diffusion-growth-bound",
      "time-derivative-bound",
      "instantaneous-positivity",
      "contraction-battery",
      "two-point-inequality-and-convolution-identity",
  };
  return names;
}

struct ExperimentConfig {
  GridSpec grid{1, 10.0, 256};

  BackendTag backend = BackendTag::spectral;
  OperatorOptions op_options;

  double m = 1.0;
  DatumSpec datum{"gaussian", {}};

  bool has_time = false;
  double T = 0.0;
  int n_steps = 0;
  int stride = 1;
  std::optional<double> epsilon_override;  // single-solve step size

  double tol = 1e-9;
  int max_iter = 5000;
  double armijo_decrease = 1e-4;
  double armijo_backtrack = 0.5;

  std::vector<SuiteCheck> suite;

  std::string output_dir = "out";
  bool output_binary = true;
  bool output_csv = true;

  std::optional<std::uint64_t> seed;

  double epsilon() const {
    if (epsilon_override) return *epsilon_override;
    if (!has_time) throw ConfigError("config: no time section to derive a step size from");
    return T / n_steps;
  }
};

inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  detail::reject_unknown_keys(
      doc, "top level",
      {"grid", "operator", "problem", "time", "solver", "suite", "output", "seed"});
  ExperimentConfig c;

  {
    if (!doc.contains("grid")) throw ConfigError("config: missing 'grid' section");
    const auto& g = doc.at("grid");
    detail::reject_unknown_keys(g, "grid", {"dim", "L", "n"});
    const double dim = detail::need_number(g, "grid", "dim");
    const double L = detail::need_number(g, "grid", "L");
    const double n = detail::need_number(g, "grid", "n");
    if (dim != std::floor(dim) || n != std::floor(n) || n <= 0.0)
      throw ConfigError("config: grid dim and n must be positive integers");
    try {
      c.grid = make_grid(static_cast<int>(dim), L, static_cast<std::size_t>(n));
    } catch (const std::invalid_argument& err) {
      throw ConfigError(std::string("config: ") + err.what());
    }
  }

  if (doc.contains("operator")) {
    const auto& op = doc.at("operator");
    detail::reject_unknown_keys(op, "operator", {"backend", "correction", "dtn_levels"});
    if (op.contains("backend")) {
      if (!op.at("backend").is_string())
        throw ConfigError("config: operator.backend must be a string");
      try {
        c.backend = parse_backend(op.at("backend").get<std::string>());
      } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("config: ") + err.what());
      }
    }
    if (op.contains("correction")) {
      if (!op.at("correction").is_string())
        throw ConfigError("config: operator.correction must be a string");
      const std::string mode = op.at("correction").get<std::string>();
      if (mode == "quadratic")
        c.op_options.riesz_correction = RieszCorrection::quadratic;
      else if (mode == "none")
        c.op_options.riesz_correction = RieszCorrection::none;
      else
        throw ConfigError("config: operator.correction must be 'quadratic' or 'none'");
    }
    if (op.contains("dtn_levels")) {
      if (!op.at("dtn_levels").is_array())
        throw ConfigError("config: operator.dtn_levels must be an array of numbers");
      c.op_options.dtn_levels.clear();
      for (const auto& v : op.at("dtn_levels")) {
        if (!v.is_number()) throw ConfigError("config: operator.dtn_levels entries must be numbers");
        c.op_options.dtn_levels.push_back(v.get<double>());
      }
    }
  }

  if (doc.contains("problem")) {
    const auto& p = doc.at("problem");
    detail::reject_unknown_keys(p, "problem", {"m", "datum", "params"});
    c.m = detail::need_number(p, "problem", "m");
    if (!(c.m > 0.0)) throw ConfigError("config: problem.m must be positive");
    if (p.contains("datum")) {
      if (!p.at("datum").is_string()) throw ConfigError("config: problem.datum must be a string");
      c.datum.name = p.at("datum").get<std::string>();
    }
    if (p.contains("params")) {
      if (!p.at("params").is_object())
        throw ConfigError("config: problem.params must be an object of numbers");
      for (const auto& [key, value] : p.at("params").items()) {
        if (!value.is_number())
          throw ConfigError("config: problem.params entries must be numbers");
        c.datum.params[key] = value.get<double>();
      }
    }
  }

  if (doc.contains("time")) {
    const auto& t = doc.at("time");
    detail::reject_unknown_keys(t, "time", {"T", "n_steps", "stride", "epsilon"});
    if (t.contains("epsilon")) {
      if (t.contains("T") || t.contains("n_steps"))
        throw ConfigError("config: time.epsilon excludes time.T and time.n_steps");
      const double eps = detail::need_number(t, "time", "epsilon");
      if (!(eps > 0.0)) throw ConfigError("config: time.epsilon must be positive");
      c.epsilon_override = eps;
    } else {
      const double T = detail::need_number(t, "time", "T");
      const double steps = detail::need_number(t, "time", "n_steps");
      if (!(T > 0.0)) throw ConfigError("config: time.T must be positive");
      if (steps != std::floor(steps) || steps <= 0.0)
        throw ConfigError("config: time.n_steps must be a positive integer");
      c.has_time = true;
      c.T = T;
      c.n_steps = static_cast<int>(steps);
      const double stride = detail::number_or(t, "time", "stride", 1.0);
      if (stride != std::floor(stride) || stride <= 0.0)
        throw ConfigError("config: time.stride must be a positive integer");
      c.stride = static_cast<int>(stride);
    }
  }

  if (doc.contains("solver")) {
    const auto& s = doc.at("solver");
    detail::reject_unknown_keys(s, "solver",
                                {"tol", "max_iter", "armijo_decrease", "armijo_backtrack"});
    c.tol = detail::number_or(s, "solver", "tol", c.tol);
    if (!(c.tol > 0.0)) throw ConfigError("config: solver.tol must be positive");
    const double mi = detail::number_or(s, "solver", "max_iter", c.max_iter);
    if (mi != std::floor(mi) || mi <= 0.0)
      throw ConfigError("config: solver.max_iter must be a positive integer");
    c.max_iter = static_cast<int>(mi);
    c.armijo_decrease = detail::number_or(s, "solver", "armijo_decrease", c.armijo_decrease);
    c.armijo_backtrack = detail::number_or(s, "solver", "armijo_backtrack", c.armijo_backtrack);
    if (!(c.armijo_decrease > 0.0 && c.armijo_decrease < 1.0))
      throw ConfigError("config: solver.armijo_decrease must be in (0,1)");
    if (!(c.armijo_backtrack > 0.0 && c.armijo_backtrack < 1.0))
      throw ConfigError("config: solver.armijo_backtrack must be in (0,1)");
  }

  if (doc.contains("suite")) {
    if (!doc.at("suite").is_array()) throw ConfigError("config: suite must be an array");
    for (const auto& entry : doc.at("suite")) {
      SuiteCheck chk;
      if (entry.is_string()) {
        chk.name = entry.get<std::string>();
      } else if (entry.is_object()) {
        detail::reject_unknown_keys(entry, "suite entry", {"name", "tolerance"});
        if (!entry.contains("name") || !entry.at("name").is_string())
          throw ConfigError("config: suite entry needs a string 'name'");
        chk.name = entry.at("name").get<std::string>();
        if (entry.contains("tolerance"))
          chk.tolerance = detail::need_number(entry, "suite entry", "tolerance");
      } else {
        throw ConfigError("config: suite entries must be names or {name, tolerance}");
      }
      if (known_suite_checks().find(chk.name) == known_suite_checks().end())
        throw ConfigError("config: unknown suite check '" + chk.name + "'");
      c.suite.push_back(chk);
    }
  }

  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    detail::reject_unknown_keys(o, "output", {"directory", "formats"});
    if (o.contains("directory")) {
      if (!o.at("directory").is_string())
        throw ConfigError("config: output.directory must be a string");
      c.output_dir = o.at("directory").get<std::string>();
    }
    if (o.contains("formats")) {
      if (!o.at("formats").is_array()) throw ConfigError("config: output.formats must be an array");
      c.output_binary = false;
      c.output_csv = false;
      for (const auto& f : o.at("formats")) {
        if (!f.is_string()) throw ConfigError("config: output.formats entries must be strings");
        const std::string fmt = f.get<std::string>();
        if (fmt == "binary")
          c.output_binary = true;
        else if (fmt == "csv")
          c.output_csv = true;
        else
          throw ConfigError("config: unknown output format '" + fmt + "'");
      }
    }
  }

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_integer())
      throw ConfigError("config: seed must be an integer");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }

  for (const SuiteCheck& chk : c.suite)
    if (check_is_randomized(chk.name) && !c.seed)
      throw ConfigError("config: suite check '" + chk.name + "' is randomized; a seed is required");

  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = read_json(path);
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError("config: " + path.string() + ": " + err.what());
  }
  return parse_config(doc);
}

// normalized defaults-filled document; this is what output files echo
inline nlohmann::json effective_echo(const ExperimentConfig& c) {
  nlohmann::json doc;
  doc["grid"] = {{"dim", c.grid.dim}, {"L", c.grid.half_width}, {"n", c.grid.points_per_dim}};
  doc["operator"] = {
      {"backend", backend_name(c.backend)},
      {"correction", c.op_options.riesz_correction == RieszCorrection::quadratic ? "quadratic"
                                                                                 : "none"},
      {"dtn_levels", c.op_options.dtn_levels}};
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [key, value] : c.datum.params) params[key] = value;
  doc["problem"] = {{"m", c.m}, {"datum", c.datum.name}, {"params", params}};
  if (c.has_time)
    doc["time"] = {{"T", c.T}, {"n_steps", c.n_steps}, {"stride", c.stride}};
  else if (c.epsilon_override)
    doc["time"] = {{"epsilon", *c.epsilon_override}};
  doc["solver"] = {{"tol", c.tol},
                   {"max_iter", c.max_iter},
                   {"armijo_decrease", c.armijo_decrease},
                   {"armijo_backtrack", c.armijo_backtrack}};
  if (!c.suite.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SuiteCheck& chk : c.suite) {
      if (chk.tolerance)
        arr.push_back({{"name", chk.name}, {"tolerance", *chk.tolerance}});
      else
        arr.push_back(chk.name);
    }
    doc["suite"] = arr;
  }
  nlohmann::json formats = nlohmann::json::array();
  if (c.output_binary) formats.push_back("binary");
  if (c.output_csv) formats.push_back("csv");
  doc["output"] = {{"directory", c.output_dir}, {"formats", formats}};
  if (c.seed) doc["seed"] = *c.seed;
  return doc;
}

inline Field make_datum(const ExperimentConfig& c) {
  try {
    return sample(c.grid, c.datum);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("config: ") + err.what());
  }
}

inline OperatorPlan make_operator_plan(const ExperimentConfig& c) {
  return OperatorPlan(c.grid, c.backend, c.op_options);
}

inline EvolutionConfig make_evolution_config(const ExperimentConfig& c, const OperatorPlan& op) {
  if (!c.has_time) throw ConfigError("config: this command needs a time section with T and n_steps");
  EvolutionConfig cfg;
  cfg.m = c.m;
  cfg.T = c.T;
  cfg.n_steps = c.n_steps;
  cfg.op = &op;
  cfg.tol = c.tol;
  cfg.max_iter = c.max_iter;
  cfg.snapshot_stride = c.stride;
  return cfg;
}

}  // namespace fpme
