#include "distopt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace distopt {

namespace {

using nlohmann::json;

class Parser {
 public:
  explicit Parser(const json& doc) : doc_(doc) {}

  const json* section(const char* name) {
    if (!doc_.contains(name)) return nullptr;
    const json& s = doc_.at(name);
    if (!s.is_object()) {
      issue(std::string(name) + ": expected an object");
      return nullptr;
    }
    return &s;
  }

  void check_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    for (const auto& item : obj.items())
      if (!allowed.count(item.key()))
        issue(where + ": unknown key '" + item.key() + "'");
  }

  double number(const json* s, const std::string& path, const char* key, double fallback) {
    if (!s || !s->contains(key)) return fallback;
    const json& v = s->at(key);
    if (!v.is_number()) {
      issue(path + "." + key + ": expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  int integer(const json* s, const std::string& path, const char* key, int fallback) {
    if (!s || !s->contains(key)) return fallback;
    const json& v = s->at(key);
    if (!v.is_number_integer()) {
      issue(path + "." + key + ": expected an integer");
      return fallback;
    }
    return v.get<int>();
  }

  std::vector<double> number_array(const json* s, const std::string& path, const char* key,
                                   std::vector<double> fallback, int required_size = -1) {
    if (!s || !s->contains(key)) return fallback;
    const json& v = s->at(key);
    if (!v.is_array() || (required_size >= 0 && static_cast<int>(v.size()) != required_size)) {
      issue(path + "." + key + ": expected an array" +
            (required_size >= 0 ? " of " + std::to_string(required_size) + " numbers" : ""));
      return fallback;
    }
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) {
        issue(path + "." + key + ": expected numeric entries");
        return fallback;
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  void require(bool ok, const std::string& message) {
    if (!ok) issue(message);
  }

  void issue(const std::string& message) { issues_.push_back(message); }

  void finish() const {
    if (!issues_.empty()) throw ConfigError(issues_);
  }

 private:
  const json& doc_;
  std::vector<std::string> issues_;
};

}  // namespace

AppConfig parse_config(const nlohmann::json& doc) {
  Parser p(doc);
  if (!doc.is_object()) throw ConfigError({"top level: expected a JSON object"});
  p.check_keys(doc, "top level",
               {"problem", "mesh", "material", "build", "level_set", "optimize", "traction",
                "sweep", "identify"});

  AppConfig cfg;
  if (!doc.contains("problem")) {
    p.issue("problem: required key missing (\"cantilever\" or \"mbb\")");
  } else if (!doc.at("problem").is_string()) {
    p.issue("problem: expected a string");
  } else {
    cfg.problem = doc.at("problem").get<std::string>();
    p.require(cfg.problem == "cantilever" || cfg.problem == "mbb",
              "problem: must be \"cantilever\" or \"mbb\", got \"" + cfg.problem + "\"");
  }
  const bool mbb = cfg.problem == "mbb";
  OptConfig& o = cfg.opt;

  const json* mesh = p.section("mesh");
  if (mesh) p.check_keys(*mesh, "mesh", {"width", "height", "nx", "ny"});
  o.width = p.number(mesh, "mesh", "width", mbb ? 150.0 : 100.0);
  o.height = p.number(mesh, "mesh", "height", 50.0);
  o.nx = p.integer(mesh, "mesh", "nx", mbb ? 150 : 100);
  o.ny = p.integer(mesh, "mesh", "ny", 50);
  p.require(o.width > 0.0, "mesh.width: must be positive");
  p.require(o.height > 0.0, "mesh.height: must be positive");
  p.require(o.nx >= 1, "mesh.nx: must be at least 1");
  p.require(o.ny >= 1, "mesh.ny: must be at least 1");

  const json* material = p.section("material");
  if (material) p.check_keys(*material, "material", {"youngs_modulus", "poisson_ratio"});
  o.youngs_modulus = p.number(material, "material", "youngs_modulus", 75000.0);
  o.poisson_ratio = p.number(material, "material", "poisson_ratio", 0.34);
  p.require(o.youngs_modulus > 0.0, "material.youngs_modulus: must be positive");
  p.require(o.poisson_ratio >= 0.0 && o.poisson_ratio < 0.5,
            "material.poisson_ratio: must lie in [0, 0.5)");

  const json* build = p.section("build");
  if (build)
    p.check_keys(*build, "build",
                 {"layers", "inactive_ratio", "inherent_strain", "substrate_span"});
  o.layers = p.integer(build, "build", "layers", 50);
  o.inactive_ratio = p.number(build, "build", "inactive_ratio", 1e-9);
  p.require(o.layers >= 1, "build.layers: must be at least 1");
  if (o.layers >= 1 && o.ny >= 1)
    p.require(o.ny % o.layers == 0,
              "mesh.ny (" + std::to_string(o.ny) + ") must be divisible by build.layers (" +
                  std::to_string(o.layers) + ")");
  p.require(o.inactive_ratio > 0.0 && o.inactive_ratio < 1.0,
            "build.inactive_ratio: must lie in (0, 1)");
  const auto strain = p.number_array(build, "build", "inherent_strain", {-0.25, 0.0}, 2);
  o.inherent_strain = EigenstrainTensor{strain[0], strain[1]};
  const double default_substrate_end = mbb ? o.width : 0.6 * o.width;
  const auto span =
      p.number_array(build, "build", "substrate_span", {0.0, default_substrate_end}, 2);
  p.require(span[0] >= 0.0 && span[0] <= span[1] && span[1] <= o.width,
            "build.substrate_span: must satisfy 0 <= x0 <= x1 <= mesh.width");

  const json* level_set = p.section("level_set");
  if (level_set)
    p.check_keys(*level_set, "level_set",
                 {"transition_width", "void_ratio", "tau", "gain", "time_step"});
  o.transition_width = p.number(level_set, "level_set", "transition_width", 0.5);
  o.void_ratio = p.number(level_set, "level_set", "void_ratio", 1e-3);
  o.rde.tau = p.number(level_set, "level_set", "tau", 1e-4);
  o.rde.gain = p.number(level_set, "level_set", "gain", 0.8);
  o.rde.dt = p.number(level_set, "level_set", "time_step", 0.1);
  p.require(o.transition_width > 0.0, "level_set.transition_width: must be positive");
  p.require(o.void_ratio > 0.0 && o.void_ratio < 1.0, "level_set.void_ratio: must lie in (0, 1)");
  p.require(o.rde.tau >= 0.0, "level_set.tau: must be non-negative");
  p.require(o.rde.gain > 0.0, "level_set.gain: must be positive");
  p.require(o.rde.dt > 0.0, "level_set.time_step: must be positive");

  const json* optimize = p.section("optimize");
  if (optimize)
    p.check_keys(*optimize, "optimize",
                 {"gamma", "beta", "volume_max", "max_iterations", "convergence_window",
                  "convergence_tol"});
  o.gamma = p.number(optimize, "optimize", "gamma", 0.1);
  o.beta = p.number(optimize, "optimize", "beta", 5.0);
  o.volume_max = p.number(optimize, "optimize", "volume_max", 0.5);
  o.max_iterations = p.integer(optimize, "optimize", "max_iterations", 300);
  o.convergence_window = p.integer(optimize, "optimize", "convergence_window", 10);
  o.convergence_tol = p.number(optimize, "optimize", "convergence_tol", 1e-3);
  p.require(o.gamma >= 0.0 && o.gamma <= 1.0, "optimize.gamma: must lie in [0, 1]");
  p.require(o.beta >= 2.0, "optimize.beta: must be at least 2");
  p.require(o.volume_max > 0.0 && o.volume_max <= 1.0, "optimize.volume_max: must lie in (0, 1]");
  p.require(o.max_iterations >= 1, "optimize.max_iterations: must be at least 1");
  p.require(o.convergence_window >= 2, "optimize.convergence_window: must be at least 2");
  p.require(o.convergence_tol > 0.0, "optimize.convergence_tol: must be positive");

  const json* traction = p.section("traction");
  if (traction) p.check_keys(*traction, "traction", {"vector", "span_elements"});
  const auto tvec = p.number_array(traction, "traction", "vector", {0.0, -10.0}, 2);
  cfg.traction_span_elements = p.integer(traction, "traction", "span_elements", 2);
  p.require(cfg.traction_span_elements >= 1, "traction.span_elements: must be at least 1");
  p.require(cfg.traction_span_elements <= std::max(o.nx, o.ny),
            "traction.span_elements: exceeds the mesh extent");

  const json* identify = p.section("identify");
  if (identify) {
    p.check_keys(*identify, "identify", {"profile_csv"});
    if (identify->contains("profile_csv")) {
      if (!identify->at("profile_csv").is_string())
        p.issue("identify.profile_csv: expected a string");
      else
        cfg.identify_profile_csv = identify->at("profile_csv").get<std::string>();
    }
  }

  const json* sweep = p.section("sweep");
  if (sweep) p.check_keys(*sweep, "sweep", {"gammas"});
  cfg.sweep_gammas =
      p.number_array(sweep, "sweep", "gammas", {0.0, 0.03, 0.05, 0.10, 0.15, 0.20});
  p.require(!cfg.sweep_gammas.empty(), "sweep.gammas: must not be empty");
  for (const double g : cfg.sweep_gammas)
    p.require(g >= 0.0 && g <= 1.0, "sweep.gammas: every entry must lie in [0, 1]");

  p.finish();

  // resolved boundary conditions
  o.bcs.traction = Eigen::Vector2d(tvec[0], tvec[1]);
  o.bcs.substrate = BoundarySelector::bottom_span(span[0], span[1]);
  if (mbb) {
    o.bcs.structural_supports = {BoundarySelector::bottom_span(0.0, 0.0),
                                 BoundarySelector::bottom_span(o.width, o.width)};
    o.bcs.traction_region = BoundarySelector::edge_span(
        BoundarySelector::Edge::Top, o.width / 2.0,
        cfg.traction_span_elements / 2.0 * (o.width / o.nx));
  } else {
    o.bcs.structural_supports = {BoundarySelector::left_edge()};
    o.bcs.traction_region = BoundarySelector::edge_span(
        BoundarySelector::Edge::Right, o.height / 2.0,
        cfg.traction_span_elements / 2.0 * (o.height / o.ny));
  }
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError({std::string("JSON parse error: ") + err.what()});
  }
  return parse_config(doc);
}

nlohmann::json config_echo(const AppConfig& config) {
  const OptConfig& o = config.opt;
  nlohmann::json j;
  j["problem"] = config.problem;
  j["mesh"] = {{"width", o.width}, {"height", o.height}, {"nx", o.nx}, {"ny", o.ny}};
  j["material"] = {{"youngs_modulus", o.youngs_modulus}, {"poisson_ratio", o.poisson_ratio}};
  j["build"] = {{"layers", o.layers},
                {"inactive_ratio", o.inactive_ratio},
                {"inherent_strain", {o.inherent_strain.ex, o.inherent_strain.ey}},
                {"substrate_span", {o.bcs.substrate.x0, o.bcs.substrate.x1}}};
  j["level_set"] = {{"transition_width", o.transition_width},
                    {"void_ratio", o.void_ratio},
                    {"tau", o.rde.tau},
                    {"gain", o.rde.gain},
                    {"time_step", o.rde.dt}};
  j["optimize"] = {{"gamma", o.gamma},
                   {"beta", o.beta},
                   {"volume_max", o.volume_max},
                   {"max_iterations", o.max_iterations},
                   {"convergence_window", o.convergence_window},
                   {"convergence_tol", o.convergence_tol}};
  j["traction"] = {{"vector", {o.bcs.traction[0], o.bcs.traction[1]}},
                   {"span_elements", config.traction_span_elements}};
  j["identify"] = {{"profile_csv", config.identify_profile_csv}};
  j["sweep"] = {{"gammas", config.sweep_gammas}};
  return j;
}

}  // namespace distopt
