#pragma once

#include <functional>

#include "polydiff/solver.hpp"

namespace polydiff {

/// Pointwise stress history problem: along a prescribed concentration path
/// u(t) at one spatial point, the combination varsigma = sigma - nu u obeys
///   varsigma' = -beta0(u, nu u + varsigma) varsigma
///               + (mu - nu beta0(u, nu u + varsigma)) u(t),
/// whose solution has the integrating-factor (closed-form) representation
/// evaluated by stress_closed_form.
struct StressODEProblem {
  std::function<double(double)> u_path;
  double varsigma0 = 0.0;
  ModelParams params;
};

/// Evaluates the closed-form representation at time t by high-order composite
/// quadrature over the path, with beta0 evaluated self-consistently along
/// (u, nu u + varsigma) by per-subinterval fixed-point iteration. The
/// subdivision is refined until two successive levels agree to 1e-10
/// (relative to max(1,|value|)); the achieved difference is reported through
/// `achieved_err` when given. Throws if refinement or the fixed point fails.
double stress_closed_form(const StressODEProblem& prob, double t,
                          double* achieved_err = nullptr);

/// Long-time pointwise stress bound: |varsigma(t)| <= exp(-t beta_G)
/// |varsigma(0)| + (mu + nu beta_R)/beta_G, valid whenever |u| <= 1 along the
/// path.
double stress_bound_value(double t, double varsigma0_abs, const ModelParams& p);

/// Closed-form space-time fields with analytic time derivative and Laplacian,
/// used to manufacture forcings that make them exact solutions.
struct ManufacturedSolution {
  using Fn = std::function<double(double, double, double)>;  // (t, x, y)
  Fn v, v_t, lap_v;
  Fn tau, tau_t, lap_tau;
  DiscreteField sample_v(const GridSpec& g, double t) const;
  DiscreteField sample_tau(const GridSpec& g, double t) const;
};

/// The shipped verification problem: decaying low-mode sine products that
/// vanish on the boundary, available in 1D and 2D.
ManufacturedSolution default_manufactured_solution(const GridSpec& g);

/// Forcing fields (f_v, f_tau) making (v*, tau*) an exact solution of the
/// transformed system with the given lift:
///   f_v = v*_t - d lap v* - E lap tau* - h,   f_tau = tau*_t - gamma(x, v*, tau*).
Forcing manufactured_forcing(const ManufacturedSolution& ms,
                             const GridSpec& g, const BoundaryLift& lift,
                             const ModelParams& p);

/// Independent reference integrator: classic RK4 on the full semi-discrete
/// system with 100 substeps per requested step, dense linear algebra.
/// Guards against grids above 512 nodes. Used as the convergence oracle for
/// the production IMEX schemes.
State dense_reference_step(const State& s, double dt,
                           const DiscreteOperators& ops,
                           const BoundaryLift& lift, const ModelParams& p,
                           const Forcing* forcing = nullptr);
State dense_reference_integrate(const State& s0, double t_end, double macro_dt,
                                const DiscreteOperators& ops,
                                const BoundaryLift& lift, const ModelParams& p,
                                const Forcing* forcing = nullptr);

}  // namespace polydiff
