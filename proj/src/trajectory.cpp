#include "polydiff/trajectory.hpp"

#include <cmath>

namespace polydiff {

State::State(double time, DiscreteField v_, DiscreteField tau_)
    : t(time), v(std::move(v_)), tau(std::move(tau_)) {
  require_same_grid(v, tau, "state");
  if (!v.all_finite() || !tau.all_finite())
    throw Error("state: non-finite values");
}

State State::zero(const GridSpec& g, double time) {
  return State(time, DiscreteField::zero(g), DiscreteField::zero(g));
}

EnergyRecord make_energy_record(const State& s, const DiscreteOperators& ops,
                                const ModelParams& p) {
  EnergyRecord e;
  e.t = s.t;
  e.norm_v = norm_l2(s.v);
  e.norm_v_hm1 = norm_hm1(s.v, ops);
  DiscreteField w(s.grid(), s.tau.values() + p.nu * s.v.values());
  e.norm_w = norm_l2(w);
  e.norm_tau_h1 = norm_h1(s.tau, ops);
  e.chi = 0.5 * p.mu * e.norm_v_hm1 * e.norm_v_hm1 +
          0.5 * p.nu * p.D * e.norm_v * e.norm_v +
          0.5 * p.E * e.norm_w * e.norm_w;
  return e;
}

double energy_chi(const State& s, const DiscreteOperators& ops,
                  const ModelParams& p) {
  return make_energy_record(s, ops, p).chi;
}

void TrajectoryRecord::validate() const {
  if (times.size() != states.size() || energy.size() != states.size())
    throw Error("trajectory: inconsistent sample arrays");
  if (!(sample_dt > 0.0) && states.size() > 1)
    throw Error("trajectory: sample_dt must be positive");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw Error("trajectory: times must be strictly increasing");
}

TrajectoryRecord make_record(std::vector<State> states, double sample_dt,
                             const DiscreteOperators& ops,
                             const ModelParams& p) {
  TrajectoryRecord rec;
  rec.sample_dt = sample_dt;
  rec.states = std::move(states);
  rec.times.reserve(rec.states.size());
  rec.energy.reserve(rec.states.size());
  for (std::size_t k = 0; k < rec.states.size(); ++k) {
    rec.times.push_back(static_cast<double>(k) * sample_dt);
    rec.energy.push_back(make_energy_record(rec.states[k], ops, p));
  }
  rec.validate();
  return rec;
}

double state_distance_l2(const State& a, const State& b) {
  require_same_grid(a.v, b.v, "state_distance");
  require_same_grid(a.tau, b.tau, "state_distance");
  DiscreteField dv(a.grid(), a.v.values() - b.v.values());
  DiscreteField dt(a.grid(), a.tau.values() - b.tau.values());
  const double nv = norm_l2(dv), nt = norm_l2(dt);
  return std::sqrt(nv * nv + nt * nt);
}

double state_distance_vw(const State& a, const State& b, double nu) {
  require_same_grid(a.v, b.v, "state_distance");
  DiscreteField dv(a.grid(), a.v.values() - b.v.values());
  DiscreteField dw(a.grid(), (a.tau.values() + nu * a.v.values()) -
                                 (b.tau.values() + nu * b.v.values()));
  const double nv = norm_l2(dv), nw = norm_l2(dw);
  return std::sqrt(nv * nv + nw * nw);
}

}  // namespace polydiff
