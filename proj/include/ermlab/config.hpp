#ifndef ERMLAB_CONFIG_HPP
#define ERMLAB_CONFIG_HPP

// JSON run configuration and the problem builder behind it.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ermlab/error.hpp"
#include "ermlab/experiments.hpp"
#include "ermlab/problems.hpp"

namespace ermlab {

using json = nlohmann::json;

struct OutputPaths {
  std::optional<std::string> trials;    // per-trial CSV
  std::optional<std::string> summary;   // moment and tail estimates
  std::optional<std::string> verdicts;  // verdict document

  bool operator==(const OutputPaths&) const = default;
};

struct RunConfig {
  json problem = json::object();
  std::size_t reps = 1000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::vector<MomentRequest> moments;
  std::vector<double> thresholds;
  std::optional<double> alpha;
  std::vector<CheckSpec> checks;
  OutputPaths out;
  std::string base_dir;  // resolves relative paths inside the problem; not serialized

  bool operator==(const RunConfig& o) const {
    return problem == o.problem && reps == o.reps && seed == o.seed && workers == o.workers &&
           moments.size() == o.moments.size() &&
           std::equal(moments.begin(), moments.end(), o.moments.begin(),
                      [](const MomentRequest& a, const MomentRequest& b) { return a.m == b.m && a.kappa == b.kappa; }) &&
           thresholds == o.thresholds && alpha == o.alpha && checks.size() == o.checks.size() &&
           std::equal(checks.begin(), checks.end(), o.checks.begin(),
                      [](const CheckSpec& a, const CheckSpec& b) {
                        return a.kind == b.kind && a.m == b.m && a.t == b.t && a.tau == b.tau && a.s == b.s &&
                               a.delta_opt == b.delta_opt && a.eps == b.eps && a.r == b.r && a.C_scale == b.C_scale;
                      }) &&
           out == o.out;
  }
};

namespace detail {

template <class T>
std::optional<T> opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

inline void known_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

}  // namespace detail

inline json to_json(const CheckSpec& c) {
  json j;
  j["kind"] = c.kind;
  detail::put(j, "m", c.m);
  detail::put(j, "t", c.t);
  detail::put(j, "tau", c.tau);
  detail::put(j, "s", c.s);
  detail::put(j, "delta_opt", c.delta_opt);
  detail::put(j, "eps", c.eps);
  detail::put(j, "r", c.r);
  if (c.C_scale != 1.0) j["C_scale"] = c.C_scale;
  return j;
}

inline CheckSpec check_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("check must be an object");
  detail::known_keys(j, {"kind", "m", "t", "tau", "s", "delta_opt", "eps", "r", "C_scale"}, "check");
  CheckSpec c;
  c.kind = j.at("kind").get<std::string>();
  const auto& kinds = check_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) throw ConfigError("unknown check kind '" + c.kind + "'");
  c.m = detail::opt<double>(j, "m");
  c.t = detail::opt<double>(j, "t");
  c.tau = detail::opt<double>(j, "tau");
  c.s = detail::opt<double>(j, "s");
  c.delta_opt = detail::opt<double>(j, "delta_opt");
  c.eps = detail::opt<double>(j, "eps");
  c.r = detail::opt<double>(j, "r");
  c.C_scale = j.value("C_scale", 1.0);
  if (!(c.C_scale > 0.0)) throw ConfigError("C_scale must be > 0");
  return c;
}

inline json to_json(const RunConfig& cfg) {
  json j;
  j["problem"] = cfg.problem;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["moments"] = json::array();
  for (const auto& m : cfg.moments) j["moments"].push_back({{"m", m.m}, {"kappa", m.kappa}});
  j["thresholds"] = cfg.thresholds;
  detail::put(j, "alpha", cfg.alpha);
  j["checks"] = json::array();
  for (const auto& c : cfg.checks) j["checks"].push_back(to_json(c));
  json out = json::object();
  detail::put(out, "trials", cfg.out.trials);
  detail::put(out, "summary", cfg.out.summary);
  detail::put(out, "verdicts", cfg.out.verdicts);
  j["out"] = out;
  return j;
}

/// Parses and validates a run configuration. Every failure is a ConfigError.
inline RunConfig run_config_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    detail::known_keys(j, {"problem", "reps", "seed", "workers", "moments", "thresholds", "alpha", "checks", "out"},
                       "config");
    RunConfig cfg;
    if (!j.contains("problem") || !j.at("problem").is_object()) throw ConfigError("config needs a 'problem' object");
    cfg.problem = j.at("problem");
    cfg.reps = j.value("reps", std::size_t{1000});
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.workers = j.value("workers", std::size_t{1});
    if (cfg.reps < 1) throw ConfigError("reps must be >= 1");
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    for (const auto& m : j.value("moments", json::array())) {
      MomentRequest r{m.at("m").get<double>(), m.value("kappa", 1.0)};
      if (!(r.m >= 1.0) || !(r.kappa >= 1.0)) throw ConfigError("moments need m >= 1 and kappa >= 1");
      cfg.moments.push_back(r);
    }
    cfg.thresholds = j.value("thresholds", std::vector<double>{});
    cfg.alpha = detail::opt<double>(j, "alpha");
    if (cfg.alpha && !(*cfg.alpha >= 0.0 && *cfg.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    for (const auto& c : j.value("checks", json::array())) cfg.checks.push_back(check_from_json(c));
    if (j.contains("out")) {
      const auto& o = j.at("out");
      detail::known_keys(o, {"trials", "summary", "verdicts"}, "out");
      cfg.out.trials = detail::opt<std::string>(o, "trials");
      cfg.out.summary = detail::opt<std::string>(o, "summary");
      cfg.out.verdicts = detail::opt<std::string>(o, "verdicts");
    }
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse config '" + path + "': " + e.what());
  }
  auto cfg = run_config_from_json(j);
  cfg.base_dir = std::filesystem::path(path).parent_path().string();
  return cfg;
}

// ---------------------------------------------------------------------------
// Problem builder.

namespace detail {

inline Noise noise_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "gaussian") return GaussianNoise{j.at("sigma").get<double>()};
  if (type == "double_pareto") return DoubleParetoNoise{j.at("s").get<double>()};
  throw ConfigError("unknown noise type '" + type + "'");
}

/// Reads a grid CSV with header: support (or x), mu, then one column per density.
inline DensityGrid grid_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open density grid '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("density grid '" + path + "' is empty");
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
  }
  if (names.size() < 3 || (names[0] != "support" && names[0] != "x") || names[1] != "mu") {
    throw ConfigError("density grid header must be support,mu,<density>...");
  }
  std::vector<std::vector<double>> cols(names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= cols.size()) throw ConfigError("density grid row " + std::to_string(row) + " has too many cells");
      try {
        cols[c++].push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("density grid row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
    }
    if (c != cols.size()) throw ConfigError("density grid row " + std::to_string(row) + " has too few cells");
  }
  DensityGrid grid(cols[0], cols[1]);
  for (std::size_t c = 2; c < cols.size(); ++c) grid.add(names[c], cols[c]);
  return grid;
}

inline ProblemInstance build_regression(const json& j) {
  const Noise noise = noise_from_json(j.at("noise"));
  std::vector<double> f0;
  std::vector<std::vector<double>> f;
  if (j.contains("excess")) {
    const auto e = j.at("excess").get<std::vector<double>>();
    std::tie(f0, f) = orthogonal_candidates(j.at("n").get<std::size_t>(), e);
  } else {
    f0 = j.at("f0").get<std::vector<double>>();
    f = j.at("candidates").get<std::vector<std::vector<double>>>();
  }
  std::optional<RandomDesign> rd;
  if (j.contains("design")) {
    const auto& d = j.at("design");
    rd = RandomDesign{d.at("weights").get<std::vector<double>>(), d.at("sample_size").get<std::size_t>(),
                      d.at("K1").get<double>()};
  }
  return make_regression(std::move(f0), std::move(f), noise, rd);
}

inline ProblemInstance build_density(const json& j, const std::string& base_dir) {
  DensityGrid grid{{0.0}, {1.0}};
  if (j.contains("grid_csv")) {
    std::filesystem::path p = j.at("grid_csv").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    grid = grid_from_csv(p.string());
  } else {
    grid = DensityGrid(j.at("support").get<std::vector<double>>(), j.at("mu").get<std::vector<double>>());
    for (const auto& [name, values] : j.at("densities").items()) grid.add(name, values.get<std::vector<double>>());
  }
  const std::size_t target = grid.id(j.at("target").get<std::string>());
  std::vector<std::size_t> ids;
  for (const auto& name : j.at("candidates")) ids.push_back(grid.id(name.get<std::string>()));
  return make_density_family(std::move(grid), target, std::move(ids), j.at("n").get<std::size_t>());
}

}  // namespace detail

/// Builds the problem named by `family`. Relative paths resolve against base_dir.
inline ProblemInstance build_problem(const json& j, const std::string& base_dir = {}) {
  try {
    const auto family = j.at("family").get<std::string>();
    if (family == "regression") return detail::build_regression(j);
    if (family == "lower_bound") {
      const auto extra = j.value("extra", std::vector<double>{});
      return make_lower_bound_construction(j.at("n").get<std::size_t>(), j.at("s").get<double>(), extra);
    }
    if (family == "classification") {
      return make_classification(j.at("n").get<std::size_t>(), j.at("weights").get<std::vector<double>>(),
                                 j.at("eta").get<std::vector<double>>(),
                                 j.at("candidates").get<std::vector<std::vector<double>>>());
    }
    if (family == "density") return detail::build_density(j, base_dir);
    throw ConfigError("unknown problem family '" + family + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed problem: ") + e.what());
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("invalid problem: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Report documents.

inline json to_json(const Verdict& v) {
  return {{"quantity", v.quantity}, {"empirical", v.empirical}, {"stderr", v.std_error}, {"bound", v.bound},
          {"slack", v.slack},       {"pass", v.pass},           {"branch", v.branch}};
}

inline json to_json(const Summary& s) {
  json j;
  j["estar"] = s.estar;
  j["star_selected_frequency"] = s.star_selected_frequency;
  j["moments"] = json::array();
  for (const auto& m : s.moments) {
    j["moments"].push_back({{"m", m.m}, {"kappa", m.kappa}, {"value", m.value}, {"stderr", m.std_error}, {"reps", m.reps}});
  }
  j["tails"] = json::array();
  for (const auto& t : s.tails) {
    j["tails"].push_back(
        {{"threshold", t.threshold}, {"frequency", t.frequency}, {"stderr", t.std_error}, {"reps", t.reps}});
  }
  if (s.lower_bound_frequency) j["lower_bound_frequency"] = *s.lower_bound_frequency;
  return j;
}

inline json to_json(const BoundReport& r) {
  json j;
  j["bound"] = r.bound;
  j["branch"] = r.branch;
  j["scale"] = to_string(r.scale);
  j["kappa"] = r.kappa;
  if (r.mode) {
    j["mode"] = r.mode->is_tail() ? "tail" : "moment";
    j[r.mode->is_tail() ? "t" : "m"] = r.mode->value;
  }
  j["value"] = r.value;
  j["valid"] = r.valid();
  for (const auto& [k, v] : r.inputs) j["inputs"][k] = v;
  for (const auto& [k, v] : r.terms) j["terms"][k] = v;
  for (const auto& [k, v] : r.flags) j["flags"][k] = v;
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

}  // namespace ermlab

#endif  // ERMLAB_CONFIG_HPP
