#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polydiff/model.hpp"
#include "polydiff/solver.hpp"

namespace polydiff {

/// A fully parsed run description. Optional entries (dt, R_cut) left unset in
/// the file are resolved by the standard rules when the run is realized; the
/// resolved values are echoed back by resolved_config_json so every output
/// directory records exactly what was run.
struct RunConfig {
  // grid
  int dimension = 1;
  std::array<double, 2> lengths{1.0, 1.0};
  std::array<int, 2> counts{128, 1};

  // model
  double D = 1.0, E = 1.0, mu = 0.5, nu = 1.0;
  double beta_R = 1.0, beta_G = 0.5, delta_beta = 0.25, u_RG = 0.5;
  double beta_inf = 0.75;
  std::optional<double> R_cut;  // default: cutoff-radius rule
  double beta_sigma_coupling = 0.0;

  // boundary data
  std::string boundary_preset = "bump";  // homogeneous|constant|ramp_x|bump|tabulated
  double boundary_value = 0.0;
  double boundary_from = 0.0, boundary_to = 0.0;
  double boundary_amplitude = 0.4;
  std::array<double, 2> boundary_center{0.5, 0.5};
  double boundary_width = 0.15;
  std::vector<double> boundary_table;

  // solver
  std::optional<double> dt;  // default: min(0.25/beta_R, min spacing)
  double t_end = 50.0;
  std::string scheme = "imex-cn";  // imex-euler|imex-cn
  int sample_stride = 20;
  double max_value_guard = 1e12;

  // diagnostics
  double delta = 0.5;
  double horizon = 5.0;
  std::vector<double> shifts{0.0, 5.0, 10.0, 20.0, 40.0};
  int ensemble_size = 8;
  int dissipation_ensemble = 6;
  std::uint64_t seed = 42;

  // initial data
  std::string initial_kind = "random";  // random|zero
  double initial_amplitude = 0.5;
  int initial_modes = 12;
  double initial_decay = 1.0;

  // output
  std::string output_directory = "out";
};

/// Parses a JSON run description. Unknown keys anywhere are rejected with the
/// full key path; malformed JSON reports the parser's position message.
RunConfig parse_config(const std::string& text, const std::string& origin);
RunConfig load_config(const std::filesystem::path& path);

/// Realization helpers (each validates the relevant block).
GridSpec make_grid(const RunConfig& c);
BoundaryPreset make_preset(const RunConfig& c);
ModelParams make_params(const RunConfig& c);  // resolves R_cut
SolverConfig make_solver(const RunConfig& c); // resolves dt

/// The fully resolved configuration as pretty-printed JSON.
std::string resolved_config_json(const RunConfig& c);

}  // namespace polydiff
