#pragma once

#include <span>

#include "polydiff/solver.hpp"

namespace polydiff {

/// Certified exponential decay rate of the energy functional chi.
/// For mu > 0 the rate min(mu D / (mu/lambda_1 + nu D), beta_G) follows from
/// the discrete energy identity plus the norm ordering with the discrete
/// lambda_1. For mu = 0 no rate is exhibited analytically; the shipped value
/// 0.9 * min(beta_G, D lambda_1) is validated empirically by decay-rate fits
/// on the default test configuration and can overestimate the true rate when
/// E >> D (in which case the certified check honestly fails).
double compute_gamma(const DiscreteOperators& ops, const ModelParams& p);

/// The fitted dissipation estimate chi(t) <= exp(-gamma t) chi(0) + Gamma.
/// Gamma is produced by the two-phase procedure: fitted on a calibration
/// ensemble, then validated on held-out runs (stated in every report).
struct DissipationEstimate {
  double gamma_hat = 0.0;
  double Gamma_hat = 0.0;
};

/// Phase one of the two-phase fit: 1.5 * max late-time chi over a calibration
/// ensemble (samples with t >= late_fraction * final time).
double fit_absorbing_level(std::span<const TrajectoryRecord> calibration,
                           double late_fraction = 0.5, double safety = 1.5);

struct DissipationReport {
  bool bound_ok = true;       // chi(t) <= e^{-gamma t} chi(0) + Gamma(1+tol)
  bool absorb_ok = true;      // entered {chi <= 2 Gamma} and never left
  double entry_time = -1.0;   // first sample time inside the absorbing set
  double worst_margin = 0.0;  // min over samples of bound - chi
  double first_violation_time = -1.0;
};

/// Checks one trajectory against the estimate. Absorption uses the hysteresis
/// band: entry at chi <= 2 Gamma, exit only counted above 2 Gamma (1+tol).
DissipationReport dissipation_check(const TrajectoryRecord& traj,
                                    const DissipationEstimate& est,
                                    double tol = 0.05);

/// Drops the first h/sample_dt samples and re-zeroes the clock; h must align
/// with the sampling stride (1e-9 relative) and lie inside the span.
TrajectoryRecord shift_trajectory(const TrajectoryRecord& traj, double h);

/// Product spectral distance of order -delta between two records over [0, M]:
/// max over the shared samples of sqrt(||dv||^2_{-delta} + ||dtau||^2_{-delta}).
double traj_distance(const TrajectoryRecord& a, const TrajectoryRecord& b,
                     double delta, double horizon,
                     const DiscreteOperators& ops);

struct SemiflowReport {
  double radius = 0.0;
  double max_amplification = 0.0;  // worst dist(t)/dist(0) over the ensemble
  double modulus_bound = 0.0;      // 1.1 * exp(c_hat * T)
  bool ok = true;
};

/// Empirical continuity of the solution map: integrates an ensemble of
/// perturbed copies of `base` (perturbation radius in the product L2 metric)
/// and compares the worst distance amplification with the Gronwall modulus.
SemiflowReport semiflow_continuity_check(const State& base, double radius,
                                         int ensemble, double t_end,
                                         const SolverConfig& cfg,
                                         const DiscreteOperators& ops,
                                         const BoundaryLift& lift,
                                         const ModelParams& p,
                                         std::uint64_t seed);

struct AttractionReport {
  std::vector<double> shifts;
  std::vector<double> attraction;  // A(h) per shift
  double tail_offset = 0.0;        // where the attractor proxy tails start
  double section_diameter = 0.0;   // spectral-metric diameter of the proxy section
  double regularity_ratio = 0.0;   // L2-vs-spectral norm ratio over the section
  double frechet_value = 0.0;      // trajectory-space pre-norm of the worst pair
  bool nonincreasing_ok = true;
  bool contraction_ok = true;      // A(max shift) <= 0.1 A(0)
};

/// Attraction functional over an ensemble: A(h) = sup over members of the
/// infimum distance between the h-shifted trajectory (restricted to the
/// horizon) and the late-time bundle of tails designated at
/// h_tail = max(shifts) + horizon. Every record must span h_tail + horizon.
AttractionReport attraction_diagnostic(std::span<const TrajectoryRecord> ensemble,
                                       std::span<const double> shifts,
                                       double delta, double horizon,
                                       const DiscreteOperators& ops);

/// Pointwise long-time stress-bound audit of a trajectory: checks
/// |varsigma(t,x)| <= e^{-t beta_G} |varsigma(0,x)| + (mu + nu beta_R)/beta_G
/// nodewise, where varsigma = sigma - nu u. Only meaningful when the premise
/// max|u| <= 1 holds along the run; `premise_ok` reports that.
struct StressBoundReport {
  bool premise_ok = true;
  bool bound_ok = true;
  double worst_slack = 0.0;  // min over nodes/samples of bound - |varsigma|
  double max_abs_u = 0.0;
};
StressBoundReport stress_bound_check(const TrajectoryRecord& traj,
                                     const BoundaryLift& lift,
                                     const ModelParams& p, double tol = 1e-8);

}  // namespace polydiff
