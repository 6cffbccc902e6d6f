#include "polydiff/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "polydiff/errors.hpp"

namespace polydiff {

using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& origin, const std::string& path) {
  throw ConfigError(origin + ": unknown key '" + path + "'");
}

void require_keys(const json& obj, const std::string& origin,
                  const std::string& prefix,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw ConfigError(origin + ": '" +
                      (prefix.empty() ? std::string("<root>") : prefix) +
                      "' must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key))
      bad_key(origin, prefix.empty() ? key : prefix + "." + key);
}

template <typename T>
void read_to(const json& obj, const std::string& origin,
             const std::string& path, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": bad value for '" + path + "." + key +
                      "': " + e.what());
  }
}

template <typename T>
void read_optional(const json& obj, const std::string& origin,
                   const std::string& path, const char* key,
                   std::optional<T>& out) {
  if (!obj.contains(key)) return;
  T v{};
  read_to(obj, origin, path, key, v);
  out = v;
}

void read_pair(const json& obj, const std::string& origin,
               const std::string& path, const char* key,
               std::array<double, 2>& out) {
  if (!obj.contains(key)) return;
  const json& a = obj.at(key);
  if (!a.is_array() || a.empty() || a.size() > 2)
    throw ConfigError(origin + ": '" + path + "." + key +
                      "' must be an array of one or two numbers");
  try {
    out[0] = a.at(0).get<double>();
    out[1] = a.size() == 2 ? a.at(1).get<double>() : out[1];
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": bad value for '" + path + "." + key +
                      "': " + e.what());
  }
}

void read_pair(const json& obj, const std::string& origin,
               const std::string& path, const char* key,
               std::array<int, 2>& out) {
  if (!obj.contains(key)) return;
  const json& a = obj.at(key);
  if (!a.is_array() || a.empty() || a.size() > 2)
    throw ConfigError(origin + ": '" + path + "." + key +
                      "' must be an array of one or two integers");
  try {
    out[0] = a.at(0).get<int>();
    out[1] = a.size() == 2 ? a.at(1).get<int>() : out[1];
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": bad value for '" + path + "." + key +
                      "': " + e.what());
  }
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  require_keys(root, origin, "",
               {"grid", "model", "solver", "diagnostics", "initial", "output"});

  RunConfig c;

  if (root.contains("grid")) {
    const json& g = root.at("grid");
    require_keys(g, origin, "grid", {"dimension", "lengths", "counts"});
    read_to(g, origin, "grid", "dimension", c.dimension);
    read_pair(g, origin, "grid", "lengths", c.lengths);
    read_pair(g, origin, "grid", "counts", c.counts);
    if (c.dimension == 1) c.counts[1] = 1;
  }

  if (root.contains("model")) {
    const json& m = root.at("model");
    require_keys(m, origin, "model",
                 {"D", "E", "mu", "nu", "beta_R", "beta_G", "delta_beta",
                  "u_RG", "beta_inf", "R_cut", "beta_sigma_coupling",
                  "boundary"});
    read_to(m, origin, "model", "D", c.D);
    read_to(m, origin, "model", "E", c.E);
    read_to(m, origin, "model", "mu", c.mu);
    read_to(m, origin, "model", "nu", c.nu);
    read_to(m, origin, "model", "beta_R", c.beta_R);
    read_to(m, origin, "model", "beta_G", c.beta_G);
    read_to(m, origin, "model", "delta_beta", c.delta_beta);
    read_to(m, origin, "model", "u_RG", c.u_RG);
    read_to(m, origin, "model", "beta_inf", c.beta_inf);
    read_optional(m, origin, "model", "R_cut", c.R_cut);
    read_to(m, origin, "model", "beta_sigma_coupling", c.beta_sigma_coupling);
    if (m.contains("boundary")) {
      const json& b = m.at("boundary");
      require_keys(b, origin, "model.boundary",
                   {"preset", "value", "from", "to", "amplitude", "center",
                    "width", "table"});
      read_to(b, origin, "model.boundary", "preset", c.boundary_preset);
      read_to(b, origin, "model.boundary", "value", c.boundary_value);
      read_to(b, origin, "model.boundary", "from", c.boundary_from);
      read_to(b, origin, "model.boundary", "to", c.boundary_to);
      read_to(b, origin, "model.boundary", "amplitude", c.boundary_amplitude);
      read_pair(b, origin, "model.boundary", "center", c.boundary_center);
      read_to(b, origin, "model.boundary", "width", c.boundary_width);
      read_to(b, origin, "model.boundary", "table", c.boundary_table);
    }
  }

  if (root.contains("solver")) {
    const json& s = root.at("solver");
    require_keys(s, origin, "solver",
                 {"dt", "t_end", "scheme", "sample_stride", "max_value_guard"});
    read_optional(s, origin, "solver", "dt", c.dt);
    read_to(s, origin, "solver", "t_end", c.t_end);
    read_to(s, origin, "solver", "scheme", c.scheme);
    read_to(s, origin, "solver", "sample_stride", c.sample_stride);
    read_to(s, origin, "solver", "max_value_guard", c.max_value_guard);
  }

  if (root.contains("diagnostics")) {
    const json& d = root.at("diagnostics");
    require_keys(d, origin, "diagnostics",
                 {"delta", "horizon", "shifts", "ensemble_size",
                  "dissipation_ensemble", "seed"});
    read_to(d, origin, "diagnostics", "delta", c.delta);
    read_to(d, origin, "diagnostics", "horizon", c.horizon);
    read_to(d, origin, "diagnostics", "shifts", c.shifts);
    read_to(d, origin, "diagnostics", "ensemble_size", c.ensemble_size);
    read_to(d, origin, "diagnostics", "dissipation_ensemble",
            c.dissipation_ensemble);
    read_to(d, origin, "diagnostics", "seed", c.seed);
  }

  if (root.contains("initial")) {
    const json& i = root.at("initial");
    require_keys(i, origin, "initial",
                 {"kind", "amplitude", "num_modes", "decay"});
    read_to(i, origin, "initial", "kind", c.initial_kind);
    read_to(i, origin, "initial", "amplitude", c.initial_amplitude);
    read_to(i, origin, "initial", "num_modes", c.initial_modes);
    read_to(i, origin, "initial", "decay", c.initial_decay);
  }

  if (root.contains("output")) {
    const json& o = root.at("output");
    require_keys(o, origin, "output", {"directory"});
    read_to(o, origin, "output", "directory", c.output_directory);
  }

  // Early structural validation so errors point at the config, not the run.
  try {
    make_grid(c);
    make_params(c);
    make_preset(c);
    make_solver(c);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (c.initial_kind != "random" && c.initial_kind != "zero")
    throw ConfigError(origin + ": initial.kind must be 'random' or 'zero'");
  if (c.ensemble_size < 1 || c.dissipation_ensemble < 1)
    throw ConfigError(origin + ": ensemble sizes must be positive");
  if (c.shifts.empty())
    throw ConfigError(origin + ": diagnostics.shifts must be nonempty");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.filename().string());
}

GridSpec make_grid(const RunConfig& c) {
  if (c.dimension == 1) return GridSpec::line(c.lengths[0], c.counts[0]);
  if (c.dimension == 2)
    return GridSpec::rectangle(c.lengths[0], c.lengths[1], c.counts[0],
                               c.counts[1]);
  throw ConfigError("grid.dimension must be 1 or 2");
}

BoundaryPreset make_preset(const RunConfig& c) {
  if (c.boundary_preset == "homogeneous") return BoundaryPreset::homogeneous();
  if (c.boundary_preset == "constant")
    return BoundaryPreset::constant(c.boundary_value);
  if (c.boundary_preset == "ramp_x")
    return BoundaryPreset::ramp_x(c.boundary_from, c.boundary_to);
  if (c.boundary_preset == "bump")
    return BoundaryPreset::bump(c.boundary_amplitude, c.boundary_center,
                                c.boundary_width);
  if (c.boundary_preset == "tabulated")
    return BoundaryPreset::tabulated(c.boundary_table);
  throw ConfigError("model.boundary.preset must be one of homogeneous, "
                    "constant, ramp_x, bump, tabulated");
}

ModelParams make_params(const RunConfig& c) {
  ModelParams p;
  p.D = c.D;
  p.E = c.E;
  p.mu = c.mu;
  p.nu = c.nu;
  p.beta_R = c.beta_R;
  p.beta_G = c.beta_G;
  p.delta_beta = c.delta_beta;
  p.u_RG = c.u_RG;
  p.beta_inf = c.beta_inf;
  p.beta_sigma_coupling = c.beta_sigma_coupling;
  p.R_cut = c.R_cut ? *c.R_cut
                    : default_cutoff_radius(make_preset(c), make_grid(c), c.mu,
                                            c.beta_G);
  p.validate();
  return p;
}

SolverConfig make_solver(const RunConfig& c) {
  SolverConfig s;
  s.dt = c.dt ? *c.dt : SolverConfig::default_dt(make_grid(c), make_params(c));
  s.t_end = c.t_end;
  s.scheme = scheme_from_name(c.scheme);
  s.sample_stride = c.sample_stride;
  s.max_value_guard = c.max_value_guard;
  s.validate();
  return s;
}

std::string resolved_config_json(const RunConfig& c) {
  const ModelParams p = make_params(c);
  const SolverConfig s = make_solver(c);
  json j;
  j["grid"] = {{"dimension", c.dimension},
               {"lengths", {c.lengths[0], c.lengths[1]}},
               {"counts", {c.counts[0], c.counts[1]}}};
  json b{{"preset", c.boundary_preset}};
  if (c.boundary_preset == "constant") b["value"] = c.boundary_value;
  if (c.boundary_preset == "ramp_x") {
    b["from"] = c.boundary_from;
    b["to"] = c.boundary_to;
  }
  if (c.boundary_preset == "bump") {
    b["amplitude"] = c.boundary_amplitude;
    b["center"] = {c.boundary_center[0], c.boundary_center[1]};
    b["width"] = c.boundary_width;
  }
  if (c.boundary_preset == "tabulated") b["table"] = c.boundary_table;
  j["model"] = {{"D", c.D},
                {"E", c.E},
                {"mu", c.mu},
                {"nu", c.nu},
                {"beta_R", c.beta_R},
                {"beta_G", c.beta_G},
                {"delta_beta", c.delta_beta},
                {"u_RG", c.u_RG},
                {"beta_inf", c.beta_inf},
                {"R_cut", p.R_cut},
                {"beta_sigma_coupling", c.beta_sigma_coupling},
                {"boundary", b}};
  j["solver"] = {{"dt", s.dt},
                 {"t_end", c.t_end},
                 {"scheme", c.scheme},
                 {"sample_stride", c.sample_stride},
                 {"max_value_guard", c.max_value_guard}};
  j["diagnostics"] = {{"delta", c.delta},
                      {"horizon", c.horizon},
                      {"shifts", c.shifts},
                      {"ensemble_size", c.ensemble_size},
                      {"dissipation_ensemble", c.dissipation_ensemble},
                      {"seed", c.seed}};
  j["initial"] = {{"kind", c.initial_kind},
                  {"amplitude", c.initial_amplitude},
                  {"num_modes", c.initial_modes},
                  {"decay", c.initial_decay}};
  j["output"] = {{"directory", c.output_directory}};
  return j.dump(2) + "\n";
}

}  // namespace polydiff
