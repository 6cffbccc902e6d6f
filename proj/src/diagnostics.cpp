#include "polydiff/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polydiff/random_fields.hpp"

namespace polydiff {

double compute_gamma(const DiscreteOperators& ops, const ModelParams& p) {
  p.validate();
  const double l1 = ops.lambda1();
  if (p.mu > 0.0) {
    const double rate_v = p.mu * p.D / (p.mu / l1 + p.nu * p.D);
    return std::min(rate_v, p.beta_G);
  }
  return 0.9 * std::min(p.beta_G, p.D * l1);
}

double fit_absorbing_level(std::span<const TrajectoryRecord> calibration,
                           double late_fraction, double safety) {
  if (calibration.empty())
    throw Error("absorbing level: empty calibration ensemble");
  double level = 0.0;
  for (const auto& rec : calibration) {
    if (rec.times.empty()) throw Error("absorbing level: empty record");
    const double cut = late_fraction * rec.times.back();
    for (std::size_t k = 0; k < rec.times.size(); ++k)
      if (rec.times[k] >= cut) level = std::max(level, rec.energy[k].chi);
  }
  return safety * level;
}

DissipationReport dissipation_check(const TrajectoryRecord& traj,
                                    const DissipationEstimate& est,
                                    double tol) {
  traj.validate();
  DissipationReport rep;
  if (traj.energy.empty()) throw Error("dissipation check: empty record");
  const double chi0 = traj.energy.front().chi;
  bool entered = false;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.energy.size(); ++k) {
    const double t = traj.times[k];
    const double chi = traj.energy[k].chi;
    const double bound =
        std::exp(-est.gamma_hat * t) * chi0 + est.Gamma_hat * (1.0 + tol);
    rep.worst_margin = std::min(rep.worst_margin, bound - chi);
    if (chi > bound && rep.first_violation_time < 0.0) {
      rep.bound_ok = false;
      rep.first_violation_time = t;
    }
    if (!entered && chi <= 2.0 * est.Gamma_hat) {
      entered = true;
      rep.entry_time = t;
    } else if (entered && chi > 2.0 * est.Gamma_hat * (1.0 + tol)) {
      rep.absorb_ok = false;
    }
  }
  if (!entered) rep.absorb_ok = false;
  return rep;
}

namespace {

long aligned_index(double h, double sample_dt, const char* what) {
  if (!(sample_dt > 0.0)) throw Error(std::string(what) + ": record has no stride");
  const long k = std::lround(h / sample_dt);
  if (k < 0) throw Error(std::string(what) + ": negative shift");
  if (std::abs(k * sample_dt - h) > 1e-9 * std::max(1.0, std::abs(h)))
    throw Error(std::string(what) + ": time does not align with the sampling stride");
  return k;
}

}  // namespace

TrajectoryRecord shift_trajectory(const TrajectoryRecord& traj, double h) {
  traj.validate();
  const long k0 = aligned_index(h, traj.sample_dt, "shift");
  if (static_cast<std::size_t>(k0) >= traj.states.size())
    throw Error("shift: shift exceeds the record span");
  TrajectoryRecord out;
  out.sample_dt = traj.sample_dt;
  const std::size_t m = traj.states.size() - k0;
  out.times.reserve(m);
  out.states.reserve(m);
  out.energy.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double t = static_cast<double>(j) * traj.sample_dt;
    out.times.push_back(t);
    State s = traj.states[k0 + j];
    s.t = t;
    out.states.push_back(std::move(s));
    EnergyRecord e = traj.energy[k0 + j];
    e.t = t;
    out.energy.push_back(e);
  }
  out.divergence = traj.divergence;
  return out;
}

namespace {

// Scaled spectral coordinates: the Euclidean norm of the difference of two
// stacks equals the product spectral distance of order -delta.
Eigen::VectorXd spectral_stack(const State& s, const DiscreteOperators& ops,
                               const Eigen::VectorXd& weights) {
  const Eigen::VectorXd cv = ops.spectral_coefficients(s.v);
  const Eigen::VectorXd ct = ops.spectral_coefficients(s.tau);
  const Eigen::Index n = cv.size();
  Eigen::VectorXd out(2 * n);
  out.head(n) = weights.cwiseProduct(cv);
  out.tail(n) = weights.cwiseProduct(ct);
  return out;
}

Eigen::VectorXd spectral_weights(const DiscreteOperators& ops, double delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw Error("trajectory distance: delta must lie in (0, 1]");
  Eigen::VectorXd w(ops.eigenvalues().size());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    w[k] = std::pow(ops.eigenvalues()[k], -0.5 * delta);
  return w;
}

}  // namespace

double traj_distance(const TrajectoryRecord& a, const TrajectoryRecord& b,
                     double delta, double horizon,
                     const DiscreteOperators& ops) {
  a.validate();
  b.validate();
  if (a.sample_dt != b.sample_dt)
    throw Error("trajectory distance: records use different sampling strides");
  if (!(horizon >= 0.0)) throw Error("trajectory distance: negative horizon");
  const long kh = static_cast<long>(std::floor(horizon / a.sample_dt + 1e-9));
  if (static_cast<std::size_t>(kh) >= a.states.size() ||
      static_cast<std::size_t>(kh) >= b.states.size())
    throw Error("trajectory distance: records do not cover the horizon");
  const Eigen::VectorXd w = spectral_weights(ops, delta);
  double dist = 0.0;
  for (long k = 0; k <= kh; ++k) {
    const Eigen::VectorXd da = spectral_stack(a.states[k], ops, w);
    const Eigen::VectorXd db = spectral_stack(b.states[k], ops, w);
    dist = std::max(dist, (da - db).norm());
  }
  return dist;
}

SemiflowReport semiflow_continuity_check(const State& base, double radius,
                                         int ensemble, double t_end,
                                         const SolverConfig& cfg,
                                         const DiscreteOperators& ops,
                                         const BoundaryLift& lift,
                                         const ModelParams& p,
                                         std::uint64_t seed) {
  if (radius < 0.0) throw Error("semiflow check: negative radius");
  SemiflowReport rep;
  rep.radius = radius;

  SolverConfig run_cfg = cfg;
  run_cfg.t_end = t_end;
  const GronwallData gw = gronwall_constant(p, ops);
  const double log_bound = std::log(1.1) + gw.c_hat * t_end;
  rep.modulus_bound = std::exp(std::min(log_bound, 700.0));

  const TrajectoryRecord base_rec = integrate(base, run_cfg, ops, lift, p);
  for (int i = 0; i < ensemble; ++i) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    DiscreteField dv = random_eigen_field(ops, rng, 12, 1.0, 1.0);
    DiscreteField dtau = random_eigen_field(ops, rng, 12, 1.0, 1.0);
    const double nv = norm_l2(dv), nt = norm_l2(dtau);
    const double scale = std::sqrt(nv * nv + nt * nt);
    if (radius == 0.0 || scale == 0.0) continue;  // zero perturbation
    State pert(base.t,
               DiscreteField(base.grid(),
                             base.v.values() + (radius / scale) * dv.values()),
               DiscreteField(base.grid(), base.tau.values() +
                                              (radius / scale) * dtau.values()));
    const TrajectoryRecord rec = integrate(pert, run_cfg, ops, lift, p);
    const std::size_t m = std::min(rec.states.size(), base_rec.states.size());
    const double d0 = state_distance_l2(rec.states[0], base_rec.states[0]);
    for (std::size_t k = 1; k < m; ++k) {
      const double dk = state_distance_l2(rec.states[k], base_rec.states[k]);
      rep.max_amplification = std::max(rep.max_amplification, dk / d0);
    }
    if (rec.divergence || base_rec.divergence) rep.ok = false;
  }
  if (rep.max_amplification > 0.0 &&
      std::log(rep.max_amplification) > log_bound)
    rep.ok = false;
  return rep;
}

AttractionReport attraction_diagnostic(std::span<const TrajectoryRecord> ensemble,
                                       std::span<const double> shifts,
                                       double delta, double horizon,
                                       const DiscreteOperators& ops) {
  if (ensemble.empty()) throw Error("attraction: empty ensemble");
  if (shifts.empty()) throw Error("attraction: no shifts given");
  for (const auto& rec : ensemble) rec.validate();
  const double sample_dt = ensemble.front().sample_dt;
  for (const auto& rec : ensemble)
    if (rec.sample_dt != sample_dt)
      throw Error("attraction: ensemble records use different strides");

  std::vector<double> hs(shifts.begin(), shifts.end());
  std::sort(hs.begin(), hs.end());
  const double h_tail = hs.back() + horizon;
  const long kh = static_cast<long>(std::floor(horizon / sample_dt + 1e-9));
  const long k_tail = aligned_index(h_tail, sample_dt, "attraction tail");
  for (const auto& rec : ensemble)
    if (rec.states.size() < static_cast<std::size_t>(k_tail + kh + 1))
      throw Error("attraction: records must span max shift + twice the horizon");

  // Precompute scaled spectral coordinates for every sample of every record.
  const Eigen::VectorXd w = spectral_weights(ops, delta);
  const std::size_t n_rec = ensemble.size();
  std::vector<std::vector<Eigen::VectorXd>> stacks(n_rec);
  for (std::size_t i = 0; i < n_rec; ++i) {
    stacks[i].reserve(ensemble[i].states.size());
    for (const State& s : ensemble[i].states)
      stacks[i].push_back(spectral_stack(s, ops, w));
  }

  auto segment_distance = [&](std::size_t ia, long ka, std::size_t ib,
                              long kb) {
    double d = 0.0;
    for (long k = 0; k <= kh; ++k)
      d = std::max(d, (stacks[ia][ka + k] - stacks[ib][kb + k]).norm());
    return d;
  };

  AttractionReport rep;
  rep.tail_offset = h_tail;
  rep.shifts = hs;
  std::size_t worst_member = 0, worst_tail = 0;
  for (std::size_t si = 0; si < hs.size(); ++si) {
    const long k0 = aligned_index(hs[si], sample_dt, "attraction shift");
    double sup = 0.0;
    for (std::size_t i = 0; i < n_rec; ++i) {
      double inf = std::numeric_limits<double>::infinity();
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < n_rec; ++j) {
        const double d = segment_distance(i, k0, j, k_tail);
        if (d < inf) {
          inf = d;
          best_j = j;
        }
      }
      if (inf > sup) {
        sup = inf;
        if (si == 0) {
          worst_member = i;
          worst_tail = best_j;
        }
      }
    }
    rep.attraction.push_back(sup);
  }

  // Proxy-section geometry at the designated tails.
  for (std::size_t i = 0; i < n_rec; ++i) {
    for (std::size_t j = i + 1; j < n_rec; ++j)
      rep.section_diameter =
          std::max(rep.section_diameter,
                   (stacks[i][k_tail] - stacks[j][k_tail]).norm());
    const State& s = ensemble[i].states[k_tail];
    const double ne =
        std::sqrt(norm_l2(s.v) * norm_l2(s.v) + norm_l2(s.tau) * norm_l2(s.tau));
    const double n0 = stacks[i][k_tail].norm();
    if (n0 > 1e-300)
      rep.regularity_ratio = std::max(rep.regularity_ratio, ne / n0);
  }

  // Trajectory-space pre-norm of the worst zero-shift member against its best
  // tail: interval sups of the distance curve over [0, i], i = 1..horizon.
  {
    const long k0 = aligned_index(hs.front(), sample_dt, "attraction shift");
    std::vector<double> sups;
    double running = 0.0;
    long k = 0;
    for (int i = 1; i <= static_cast<int>(std::floor(horizon + 1e-9)); ++i) {
      for (; k <= kh && k * sample_dt <= i + 1e-9; ++k)
        running = std::max(running, (stacks[worst_member][k0 + k] -
                                     stacks[worst_tail][k_tail + k])
                                        .norm());
      sups.push_back(running);
    }
    if (!sups.empty()) rep.frechet_value = frechet_prenorm(sups).value;
  }

  const double a0 = rep.attraction.front();
  for (std::size_t si = 1; si < rep.attraction.size(); ++si)
    if (rep.attraction[si] > 1.05 * rep.attraction[si - 1] + 1e-14 * a0)
      rep.nonincreasing_ok = false;
  rep.contraction_ok = rep.attraction.back() <= 0.1 * a0 + 1e-300;
  return rep;
}

StressBoundReport stress_bound_check(const TrajectoryRecord& traj,
                                     const BoundaryLift& lift,
                                     const ModelParams& p, double tol) {
  traj.validate();
  if (traj.states.empty()) throw Error("stress bound check: empty record");
  StressBoundReport rep;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  const std::vector<PhysicalSample> phys = recover_u_sigma(traj, lift, p);
  const Eigen::VectorXd vs0 =
      (phys.front().sigma.values() - p.nu * phys.front().u.values()).cwiseAbs();
  const double tail = (p.mu + p.nu * p.beta_R) / p.beta_G;
  for (const auto& sample : phys) {
    rep.max_abs_u = std::max(rep.max_abs_u, sample.u.max_abs());
    const Eigen::VectorXd vs =
        sample.sigma.values() - p.nu * sample.u.values();
    const double decay = std::exp(-sample.t * p.beta_G);
    for (Eigen::Index i = 0; i < vs.size(); ++i) {
      const double bound = decay * vs0[i] + tail;
      rep.worst_slack = std::min(rep.worst_slack, bound - std::abs(vs[i]));
    }
  }
  rep.premise_ok = rep.max_abs_u <= 1.0;
  rep.bound_ok = rep.worst_slack >= -tol;
  return rep;
}

}  // namespace polydiff
