#pragma once

#include <optional>
#include <vector>

#include "polydiff/grid.hpp"
#include "polydiff/model.hpp"

namespace polydiff {

/// One snapshot of the transformed unknowns (v, tau) at a time.
struct State {
  double t = 0.0;
  DiscreteField v;
  DiscreteField tau;

  State() = default;
  State(double time, DiscreteField v_, DiscreteField tau_);
  static State zero(const GridSpec& g, double time = 0.0);
  const GridSpec& grid() const { return v.grid(); }
};

/// Energy functional sample chi = (mu/2)||v||_{-1}^2 + (nu D/2)||v||^2
/// + (E/2)||w||^2 with w = tau + nu v, together with its ingredients.
struct EnergyRecord {
  double t = 0.0;
  double chi = 0.0;
  double norm_v = 0.0;       // ||v||_{L2}
  double norm_v_hm1 = 0.0;   // ||v||_{-1}
  double norm_w = 0.0;       // ||tau + nu v||_{L2}
  double norm_tau_h1 = 0.0;  // ||tau||_{H1}
};

EnergyRecord make_energy_record(const State& s, const DiscreteOperators& ops,
                                const ModelParams& p);
/// chi evaluated directly from a state (no record).
double energy_chi(const State& s, const DiscreteOperators& ops,
                  const ModelParams& p);

struct DivergenceInfo {
  long step_index = 0;
  double t = 0.0;
  std::string message;
};

/// Uniformly sampled trajectory of the transformed system. times[k] is exactly
/// k * sample_dt relative to the record's own clock, which makes shifted
/// records compose exactly.
struct TrajectoryRecord {
  double sample_dt = 0.0;
  std::vector<double> times;
  std::vector<State> states;
  std::vector<EnergyRecord> energy;
  std::optional<DivergenceInfo> divergence;

  std::size_t size() const { return states.size(); }
  double span() const { return times.empty() ? 0.0 : times.back(); }
  void validate() const;
};

/// Assembles a record from already-sampled states (diagnostics helpers and
/// tests). Energy records are computed on the fly.
TrajectoryRecord make_record(std::vector<State> states, double sample_dt,
                             const DiscreteOperators& ops, const ModelParams& p);

/// Product L2 distance on (v, tau).
double state_distance_l2(const State& a, const State& b);
/// Product L2 distance on (v, w) with w = tau + nu v (the variables of the
/// continuous-dependence estimate).
double state_distance_vw(const State& a, const State& b, double nu);

}  // namespace polydiff
