#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "fnls/analysis.hpp"
#include "fnls/io.hpp"
#include "fnls/model.hpp"
#include "fnls/solvers.hpp"

namespace fnls {

using io::json;

inline std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::point: return "point";
    case ShapeKind::contractible: return "contractible";
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::torus: return "torus";
    case ShapeKind::two_points: return "two_points";
  }
  return "point";
}

inline ShapeKind parse_shape(const std::string& s) {
  if (s == "point") return ShapeKind::point;
  if (s == "contractible") return ShapeKind::contractible;
  if (s == "sphere") return ShapeKind::sphere;
  if (s == "torus") return ShapeKind::torus;
  if (s == "two_points") return ShapeKind::two_points;
  throw ValidationError("unknown shape: " + s);
}

enum class Tier { fast, full };

inline Tier parse_tier(const std::string& s) {
  if (s == "fast") return Tier::fast;
  if (s == "full") return Tier::full;
  throw ValidationError("tier must be fast or full, got " + s);
}

inline std::string to_string(Tier t) { return t == Tier::fast ? "fast" : "full"; }

/// Model description as it appears in a model file.
///
///   {"grid": {"dim": 2, "s": 0.75, "half_width": 20, "points": 256},
///    "nonlinearity": {"kind": "power", "p": 3, "t0": 10},
///    "potential": {"kind": "ring", "m0": 1, "depth": 1, "radius": 1, "cap": 2, "width": 1, "h0": 0.1}}
namespace config {

namespace detail {

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
T need(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing config key '") + key + "'");
  return get<T>(j, key, T{});
}

} // namespace detail

inline GridSpec grid_from(const json& j) {
  GridSpec g;
  g.dim = detail::need<int>(j, "dim");
  g.s = detail::need<double>(j, "s");
  g.half_width = detail::need<double>(j, "half_width");
  g.points = detail::need<int>(j, "points");
  g.validate();
  return g;
}

inline json to_json(const GridSpec& g) {
  return json{{"dim", g.dim}, {"s", g.s}, {"half_width", g.half_width}, {"points", g.points}};
}

inline Nonlinearity nonlinearity_from(const json& j, const std::filesystem::path& base) {
  const std::string kind = detail::get<std::string>(j, "kind", "power");
  const double p = detail::need<double>(j, "p");
  const double t0 = detail::get<double>(j, "t0", 10.0);
  if (kind == "power") return Nonlinearity::power(p, t0);
  if (kind == "tabulated") {
    std::filesystem::path table = detail::need<std::string>(j, "table");
    if (table.is_relative()) table = base / table;
    return Nonlinearity::from_csv(table.string(), p, t0);
  }
  throw ValidationError("nonlinearity kind must be power or tabulated, got " + kind);
}

inline PotentialSpec potential_from(const json& j, int dim) {
  const std::string kind = detail::get<std::string>(j, "kind", "constant");
  const double m0 = detail::get<double>(j, "m0", 1.0);
  if (kind == "constant") return make_constant_potential(m0);
  const double depth = detail::need<double>(j, "depth");
  const double cap = detail::get<double>(j, "cap", m0 + depth);
  if (kind == "ring")
    return make_ring_potential(m0, depth, detail::need<double>(j, "radius"), cap, dim, detail::get<double>(j, "width", 1.0),
                               detail::get<double>(j, "h0", 0.25), detail::get<int>(j, "k_samples", 64));
  if (kind == "double_well")
    return make_double_well(m0, depth, detail::need<double>(j, "separation"), cap, detail::get<double>(j, "width", 0.8),
                            detail::get<double>(j, "h0", 0.1));
  throw ValidationError("potential kind must be constant, ring or double_well, got " + kind);
}

/// Structured-text model file: [grid], [nonlinearity] and [potential] sections of `key = value` lines, '#'
/// comments. Grid keys are N, s, L, M; the rest match the JSON keys. Returns the equivalent JSON model.
inline json parse_model_text(std::istream& in) {
  static const std::map<std::string, std::string> grid_keys{{"N", "dim"}, {"s", "s"}, {"L", "half_width"}, {"M", "points"}};
  json out = json::object();
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = fnls::detail::trim(line);
    if (line.empty()) continue;
    const std::string where = "model file line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(where + ": unterminated section header");
      section = fnls::detail::trim(line.substr(1, line.size() - 2));
      if (section != "grid" && section != "nonlinearity" && section != "potential")
        throw FormatError(where + ": unknown section [" + section + "]");
      if (out.contains(section)) throw FormatError(where + ": duplicate section [" + section + "]");
      out[section] = json::object();
      continue;
    }
    if (section.empty()) throw FormatError(where + ": key outside a section");
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(where + ": expected key = value");
    std::string key = fnls::detail::trim(line.substr(0, eq));
    const std::string value = fnls::detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw FormatError(where + ": empty key or value");
    if (section == "grid") {
      const auto it = grid_keys.find(key);
      if (it == grid_keys.end()) throw FormatError(where + ": unknown grid key '" + key + "'");
      key = it->second;
    }
    if (out[section].contains(key)) throw FormatError(where + ": duplicate key '" + key + "'");
    double v;
    if (io::parse_double(value, v)) {
      if ((key == "dim" || key == "points" || key == "k_samples") && v == std::floor(v))
        out[section][key] = static_cast<int>(v);
      else
        out[section][key] = v;
    } else {
      out[section][key] = value;
    }
  }
  for (const char* required : {"grid", "nonlinearity"})
    if (!out.contains(required)) throw FormatError(std::string("model file has no [") + required + "] section");
  return out;
}

/// Reads a model file: JSON when the extension is .json, structured text otherwise.
inline json read_model_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FormatError("model file not found: " + path.string());
  if (path.extension() == ".json") return io::read_json(path);
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return parse_model_text(in);
}

inline ModelSpec model_from(const json& j, const std::filesystem::path& base) {
  ModelSpec m;
  m.grid = grid_from(detail::need<json>(j, "grid"));
  m.nonlinearity = nonlinearity_from(detail::need<json>(j, "nonlinearity"), base);
  m.potential = potential_from(detail::get<json>(j, "potential", json::object()), m.grid.dim);
  return m;
}

inline SolveOptions solver_from(const json& j) {
  SolveOptions o;
  o.max_iters = detail::get<int>(j, "max_iters", o.max_iters);
  o.step = detail::get<double>(j, "step", o.step);
  o.step_max = detail::get<double>(j, "step_max", o.step_max);
  o.armijo = detail::get<double>(j, "armijo", o.armijo);
  o.tol_residual = detail::get<double>(j, "tol_residual", o.tol_residual);
  o.tol_pohozaev = detail::get<double>(j, "tol_pohozaev", o.tol_pohozaev);
  o.precondition = detail::get<bool>(j, "precondition", o.precondition);
  o.precondition_shift = detail::get<double>(j, "precondition_shift", o.precondition_shift);
  o.recenter = detail::get<bool>(j, "recenter", o.recenter);
  const std::string rule = detail::get<std::string>(j, "step_rule", "backtracking");
  if (rule == "fixed") o.step_rule = StepRule::fixed;
  else if (rule == "backtracking") o.step_rule = StepRule::backtracking;
  else throw ValidationError("step_rule must be fixed or backtracking");
  const std::string dir = detail::get<std::string>(j, "direction", "steepest");
  if (dir == "steepest") o.direction = Direction::steepest;
  else if (dir == "conjugate") o.direction = Direction::conjugate;
  else throw ValidationError("direction must be steepest or conjugate");
  const std::string proj = detail::get<std::string>(j, "projection", "automatic");
  if (proj == "automatic") o.projection = Projection::automatic;
  else if (proj == "pohozaev") o.projection = Projection::pohozaev;
  else if (proj == "nehari") o.projection = Projection::nehari;
  else throw ValidationError("projection must be automatic, pohozaev or nehari");
  o.validate();
  return o;
}

inline json to_json(const SolveOptions& o) {
  auto proj = o.projection == Projection::automatic ? "automatic"
              : o.projection == Projection::pohozaev ? "pohozaev"
                                                     : "nehari";
  return json{{"max_iters", o.max_iters},
              {"step_rule", o.step_rule == StepRule::fixed ? "fixed" : "backtracking"},
              {"direction", o.direction == Direction::steepest ? "steepest" : "conjugate"},
              {"step", o.step},
              {"step_max", o.step_max},
              {"armijo", o.armijo},
              {"tol_residual", o.tol_residual},
              {"tol_pohozaev", o.tol_pohozaev},
              {"precondition", o.precondition},
              {"precondition_shift", o.precondition_shift},
              {"recenter", o.recenter},
              {"projection", proj}};
}

inline ProofParams proof_from(const json& j) {
  ProofParams p;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw FormatError("proof parameter " + k + " must be a number");
    p.set(k, v.get<double>());
  }
  return p;
}

inline json to_json(const ProofParams& p) {
  json j = json::object();
  for (const auto& [k, v] : p.as_map()) j[k] = v;
  return j;
}

} // namespace config

struct GroundStateParams {
  double a = 1.0;
  double seed_amplitude = 3.0;
  double seed_width = 1.0;
};

struct DictionaryParams {
  int samples = 2;
};

struct SemiclassicalParams {
  std::vector<double> eps{0.4, 0.2, 0.1};
  std::vector<double> t{0.7, 1.0, 1.3};
  int p_count = 8;                   // points of K used for the Phi_eps seeds and the sandwich sample
  double delta_hat_fraction = 0.5;   // delta_hat as a fraction of its admissible bound, when delta_hat = 0
  ClusterOptions cluster;
};

/// Everything a run needs; `resolved()` reproduces the run.
struct RunConfig {
  std::string run_id = "run";
  std::uint64_t seed = 1;
  Tier tier = Tier::fast;
  int jobs = 0;
  json model_json;
  std::filesystem::path base_dir = ".";
  ModelSpec model;
  SolveOptions solver;
  ProofParams proof;
  GroundStateParams ground_state;
  DictionaryParams dictionary;
  SemiclassicalParams semiclassical;

  json resolved() const {
    json sc{{"eps", semiclassical.eps},
            {"t", semiclassical.t},
            {"p_count", semiclassical.p_count},
            {"delta_hat_fraction", semiclassical.delta_hat_fraction},
            {"cluster",
             {{"tol_energy", semiclassical.cluster.tol_energy},
              {"tol_distance", semiclassical.cluster.tol_distance},
              {"tol_location", semiclassical.cluster.tol_location},
              {"symmetry_quotient", semiclassical.cluster.symmetry_quotient}}}};
    return json{{"run_id", run_id},
                {"seed", seed},
                {"tier", to_string(tier)},
                {"jobs", jobs},
                {"model", model_json},
                {"solver", config::to_json(solver)},
                {"proof", config::to_json(proof)},
                {"ground_state",
                 {{"a", ground_state.a},
                  {"seed_amplitude", ground_state.seed_amplitude},
                  {"seed_width", ground_state.seed_width}}},
                {"dictionary", {{"samples", dictionary.samples}}},
                {"semiclassical", sc}};
  }
};

/// Builds a RunConfig from JSON. "model" is either an inline object or a path relative to `base`.
inline RunConfig parse_run_config(const json& j, const std::filesystem::path& base) {
  using config::detail::get;
  RunConfig c;
  c.base_dir = base;
  c.run_id = get<std::string>(j, "run_id", c.run_id);
  c.seed = get<std::uint64_t>(j, "seed", c.seed);
  c.tier = parse_tier(get<std::string>(j, "tier", "fast"));
  c.jobs = get<int>(j, "jobs", 0);
  if (!j.contains("model")) throw FormatError("config has no model");
  std::filesystem::path model_base = base;
  if (j.at("model").is_string()) {
    std::filesystem::path mp = j.at("model").get<std::string>();
    if (mp.is_relative()) mp = base / mp;
    c.model_json = config::read_model_file(mp);
    model_base = mp.parent_path();
  } else {
    c.model_json = j.at("model");
  }
  // the resolved config is written elsewhere, so table paths are pinned to absolute form
  if (c.model_json.contains("nonlinearity") && c.model_json["nonlinearity"].contains("table") &&
      c.model_json["nonlinearity"]["table"].is_string()) {
    std::filesystem::path t = c.model_json["nonlinearity"]["table"].get<std::string>();
    if (t.is_relative()) c.model_json["nonlinearity"]["table"] = std::filesystem::absolute(model_base / t).string();
  }
  c.model = config::model_from(c.model_json, model_base);
  c.solver = config::solver_from(get<json>(j, "solver", json::object()));
  c.proof = config::proof_from(get<json>(j, "proof", json::object()));
  if (!j.contains("proof") || !j.at("proof").contains("h0")) c.proof.h0 = c.model.potential.h0;
  const json gs = get<json>(j, "ground_state", json::object());
  c.ground_state.a = get<double>(gs, "a", c.model.potential.m0);
  c.ground_state.seed_amplitude = get<double>(gs, "seed_amplitude", c.ground_state.seed_amplitude);
  c.ground_state.seed_width = get<double>(gs, "seed_width", c.ground_state.seed_width);
  c.dictionary.samples = get<int>(get<json>(j, "dictionary", json::object()), "samples", c.dictionary.samples);
  const json sc = get<json>(j, "semiclassical", json::object());
  c.semiclassical.eps = get<std::vector<double>>(sc, "eps", c.semiclassical.eps);
  c.semiclassical.t = get<std::vector<double>>(sc, "t", c.semiclassical.t);
  c.semiclassical.p_count = get<int>(sc, "p_count", c.semiclassical.p_count);
  c.semiclassical.delta_hat_fraction = get<double>(sc, "delta_hat_fraction", c.semiclassical.delta_hat_fraction);
  const json cl = get<json>(sc, "cluster", json::object());
  c.semiclassical.cluster.tol_energy = get<double>(cl, "tol_energy", c.semiclassical.cluster.tol_energy);
  c.semiclassical.cluster.tol_distance = get<double>(cl, "tol_distance", c.semiclassical.cluster.tol_distance);
  c.semiclassical.cluster.tol_location = get<double>(cl, "tol_location", c.semiclassical.cluster.tol_location);
  c.semiclassical.cluster.symmetry_quotient =
      get<bool>(cl, "symmetry_quotient", c.semiclassical.cluster.symmetry_quotient);
  c.semiclassical.cluster.symmetry = c.model.potential.symmetry;
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FormatError("config file not found: " + path.string());
  return parse_run_config(io::read_json(path), path.parent_path());
}

} // namespace fnls
