#include "polydiff/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polydiff {

void ModelParams::validate() const {
  auto bad = [](const char* msg) { throw Error(std::string("model: ") + msg); };
  if (!(D > 0.0)) bad("D must be positive");
  if (!(E > 0.0)) bad("E must be positive");
  if (!(mu >= 0.0)) bad("mu must be nonnegative");
  if (!(nu > 0.0)) bad("nu must be positive");
  if (!(beta_G > 0.0)) bad("beta_G must be positive");
  if (!(beta_R > beta_G)) bad("beta_R must exceed beta_G");
  if (!(delta_beta > 0.0)) bad("delta_beta must be positive");
  if (!(beta_inf >= beta_G && beta_inf <= beta_R))
    bad("beta_inf must lie in [beta_G, beta_R]");
  if (!(R_cut > 0.0)) bad("R_cut must be positive");
  if (!std::isfinite(beta_sigma_coupling)) bad("beta_sigma_coupling must be finite");
}

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// C2 smoothstep on [0,1].
double smooth5(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
double smooth5_d(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }

// tanh profile between the glassy and rubbery rates, before the cutoff.
double profile(double u, double sigma, const ModelParams& p) {
  const double arg = (u + p.beta_sigma_coupling * sigma - p.u_RG) / p.delta_beta;
  return 0.5 * (p.beta_R + p.beta_G) + 0.5 * (p.beta_R - p.beta_G) * std::tanh(arg);
}

double profile_darg(double u, double sigma, const ModelParams& p) {
  const double arg = (u + p.beta_sigma_coupling * sigma - p.u_RG) / p.delta_beta;
  const double ch = std::cosh(arg);
  // sech^2 underflows gracefully for saturated arguments
  const double sech2 = (std::abs(arg) > 350.0) ? 0.0 : 1.0 / (ch * ch);
  return 0.5 * (p.beta_R - p.beta_G) * sech2 / p.delta_beta;
}

}  // namespace

double beta0(double u, double sigma, const ModelParams& p) {
  const double r = std::abs(u) + std::abs(sigma);
  if (!(r > p.R_cut)) return profile(u, sigma, p);  // also covers R_cut = inf
  if (r >= 2.0 * p.R_cut) return p.beta_inf;
  const double s = smooth5((r - p.R_cut) / p.R_cut);
  return (1.0 - s) * profile(u, sigma, p) + s * p.beta_inf;
}

double beta0_du(double u, double sigma, const ModelParams& p) {
  const double r = std::abs(u) + std::abs(sigma);
  if (!(r > p.R_cut)) return profile_darg(u, sigma, p);
  if (r >= 2.0 * p.R_cut) return 0.0;
  const double x = (r - p.R_cut) / p.R_cut;
  const double s = smooth5(x);
  const double ds_du = smooth5_d(x) / p.R_cut * sgn(u);
  return (1.0 - s) * profile_darg(u, sigma, p) +
         ds_du * (p.beta_inf - profile(u, sigma, p));
}

double beta0_dsigma(double u, double sigma, const ModelParams& p) {
  const double r = std::abs(u) + std::abs(sigma);
  if (!(r > p.R_cut)) return p.beta_sigma_coupling * profile_darg(u, sigma, p);
  if (r >= 2.0 * p.R_cut) return 0.0;
  const double x = (r - p.R_cut) / p.R_cut;
  const double s = smooth5(x);
  const double ds_dsigma = smooth5_d(x) / p.R_cut * sgn(sigma);
  return (1.0 - s) * p.beta_sigma_coupling * profile_darg(u, sigma, p) +
         ds_dsigma * (p.beta_inf - profile(u, sigma, p));
}

double solve_boundary_compat(double phi_value, const ModelParams& p) {
  const double target = p.mu * phi_value;
  if (target == 0.0) return 0.0;  // exact root: beta0*0 - 0 = 0

  auto residual = [&](double s) { return beta0(phi_value, s, p) * s - target; };

  // beta0 >= beta_G > 0 guarantees a sign change on [0, target/beta_G]
  // (order-swapped for negative targets).
  double lo = std::min(0.0, target / p.beta_G);
  double hi = std::max(0.0, target / p.beta_G);
  double flo = residual(lo);
  double fhi = residual(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0)
    throw Error("boundary compatibility: no bracket; relaxation rate violates "
                "its lower bound");

  double s = target / beta0(phi_value, 0.0, p);  // good initial guess
  if (s < lo || s > hi) s = 0.5 * (lo + hi);
  const double tol = 1e-14 * std::max(1.0, std::abs(target));
  for (int it = 0; it < 200; ++it) {
    const double f = residual(s);
    if (std::abs(f) <= tol) return s;
    if (f * flo < 0.0) {
      hi = s;
      fhi = f;
    } else {
      lo = s;
      flo = f;
    }
    const double df = beta0(phi_value, s, p) + s * beta0_dsigma(phi_value, s, p);
    double next = (df != 0.0) ? s - f / df : s;
    if (!(next > std::min(lo, hi) && next < std::max(lo, hi)))
      next = 0.5 * (lo + hi);  // Newton left the bracket: bisect
    if (next == s) next = 0.5 * (lo + hi);
    s = next;
  }
  if (std::abs(residual(s)) <= 1e-12 * std::max(1.0, std::abs(target))) return s;
  throw Error("boundary compatibility: root finder stalled");
}

BoundaryPreset BoundaryPreset::homogeneous() { return constant(0.0); }

BoundaryPreset BoundaryPreset::constant(double value) {
  BoundaryPreset b;
  b.kind = Kind::Constant;
  b.value = value;
  return b;
}

BoundaryPreset BoundaryPreset::ramp_x(double from, double to) {
  BoundaryPreset b;
  b.kind = Kind::RampX;
  b.from = from;
  b.to = to;
  return b;
}

BoundaryPreset BoundaryPreset::bump(double amplitude, std::array<double, 2> center,
                                    double width) {
  BoundaryPreset b;
  b.kind = Kind::Bump;
  b.amplitude = amplitude;
  b.center = center;
  b.width = width;
  return b;
}

BoundaryPreset BoundaryPreset::tabulated(std::vector<double> closed_values) {
  BoundaryPreset b;
  b.kind = Kind::Tabulated;
  b.table = std::move(closed_values);
  return b;
}

double BoundaryPreset::evaluate(const GridSpec& g, double x, double y) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::RampX:
      return from + (to - from) * x / g.length[0];
    case Kind::Bump: {
      double rho2 = (x - center[0]) * (x - center[0]);
      if (g.dimension == 2) rho2 += (y - center[1]) * (y - center[1]);
      return amplitude * std::exp(-rho2 / (2.0 * width * width));
    }
    case Kind::Tabulated:
      throw Error("boundary preset: tabulated presets are sampled, not evaluated");
  }
  throw Error("boundary preset: unknown kind");
}

double BoundaryPreset::laplacian(const GridSpec& g, double x, double y) const {
  switch (kind) {
    case Kind::Constant:
    case Kind::RampX:
      return 0.0;
    case Kind::Bump: {
      const double s2 = width * width;
      double rho2 = (x - center[0]) * (x - center[0]);
      if (g.dimension == 2) rho2 += (y - center[1]) * (y - center[1]);
      const double dim = g.dimension;
      return amplitude * std::exp(-rho2 / (2.0 * s2)) * (rho2 / (s2 * s2) - dim / s2);
    }
    case Kind::Tabulated:
      throw Error("boundary preset: tabulated presets have no analytic Laplacian");
  }
  throw Error("boundary preset: unknown kind");
}

double BoundaryPreset::max_abs_bound(const GridSpec& g) const {
  switch (kind) {
    case Kind::Constant:
      return std::abs(value);
    case Kind::RampX:
      return std::max(std::abs(from), std::abs(to));
    case Kind::Bump:
      return std::abs(amplitude);
    case Kind::Tabulated: {
      (void)g;
      double m = 0.0;
      for (double v : table) m = std::max(m, std::abs(v));
      return m;
    }
  }
  throw Error("boundary preset: unknown kind");
}

double default_cutoff_radius(const BoundaryPreset& preset, const GridSpec& g,
                             double mu, double beta_G) {
  const double max_phi = preset.max_abs_bound(g);
  const double max_phi_stress = mu * max_phi / beta_G;  // |S(phi)| <= mu|phi|/beta_G
  return 10.0 * (1.0 + max_phi + max_phi_stress);
}

BoundaryLift make_homogeneous_lift(const GridSpec& g) {
  BoundaryLift lift;
  lift.phi = ClosedField::zero(g);
  lift.phi_stress = ClosedField::zero(g);
  lift.h_field = DiscreteField::zero(g);
  lift.phi_interior = DiscreteField::zero(g);
  lift.phi_stress_interior = DiscreteField::zero(g);
  lift.homogeneous = true;
  return lift;
}

BoundaryLift make_lift(const GridSpec& g, const BoundaryPreset& preset,
                       const ModelParams& p) {
  p.validate();
  BoundaryLift lift;
  if (preset.kind == BoundaryPreset::Kind::Tabulated) {
    Eigen::VectorXd vals(preset.table.size());
    for (std::size_t i = 0; i < preset.table.size(); ++i) vals[i] = preset.table[i];
    lift.phi = ClosedField::from_values(g, std::move(vals));
  } else {
    lift.phi = ClosedField::from_function(
        g, [&](double x, double y) { return preset.evaluate(g, x, y); });
  }

  // Stress lift derived pointwise on the closed grid; compatibility holds
  // everywhere by construction.
  {
    Eigen::VectorXd s(lift.phi.values().size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
      s[i] = solve_boundary_compat(lift.phi.values()[i], p);
    lift.phi_stress = ClosedField::from_values(g, std::move(s));
  }

  // Forcing h = D lap(phi) + E lap(phi_stress). Analytic Laplacian for the
  // closed-form concentration presets; the stress lift (a root of the
  // compatibility equation) and tabulated data use the discrete stencil.
  DiscreteField lap_phi = preset.has_analytic_laplacian()
                              ? DiscreteField::from_function(
                                    g,
                                    [&](double x, double y) {
                                      return preset.laplacian(g, x, y);
                                    })
                              : lift.phi.laplacian_interior();
  DiscreteField lap_phi_stress =
      (preset.kind == BoundaryPreset::Kind::Constant)
          ? DiscreteField::zero(g)  // constant phi gives constant phi_stress
          : lift.phi_stress.laplacian_interior();
  lift.h_field =
      DiscreteField(g, p.D * lap_phi.values() + p.E * lap_phi_stress.values());

  lift.phi_interior = lift.phi.interior();
  lift.phi_stress_interior = lift.phi_stress.interior();
  lift.homogeneous = lift.phi.max_abs() == 0.0;

  // Invariant: the compatibility residual stays below 1e-10 on the closed grid.
  for (Eigen::Index i = 0; i < lift.phi.values().size(); ++i) {
    const double phi = lift.phi.values()[i];
    const double ps = lift.phi_stress.values()[i];
    const double res = beta0(phi, ps, p) * ps - p.mu * phi;
    if (std::abs(res) > 1e-10)
      throw Error("boundary lift: compatibility residual exceeds 1e-10");
  }
  return lift;
}

double gamma_point(double v, double tau, double phi, double phi_stress,
                   const ModelParams& p) {
  const double u = v + phi;
  const double sigma = tau + p.nu * v + phi_stress;
  return p.mu * u - beta0(u, sigma, p) * sigma;
}

void gamma_rhs_into(const DiscreteField& v, const DiscreteField& tau,
                    const BoundaryLift& lift, const ModelParams& p,
                    Eigen::VectorXd& out) {
  require_same_grid(v, tau, "gamma_rhs");
  if (!(v.grid() == lift.phi_interior.grid()))
    throw Error("gamma_rhs: state grid does not match the lift");
  const Eigen::VectorXd& vv = v.values();
  const Eigen::VectorXd& tv = tau.values();
  const Eigen::VectorXd& pv = lift.phi_interior.values();
  const Eigen::VectorXd& sv = lift.phi_stress_interior.values();
  out.resize(vv.size());
  for (Eigen::Index i = 0; i < vv.size(); ++i)
    out[i] = gamma_point(vv[i], tv[i], pv[i], sv[i], p);
}

DiscreteField gamma_rhs(const DiscreteField& v, const DiscreteField& tau,
                        const BoundaryLift& lift, const ModelParams& p) {
  Eigen::VectorXd out;
  gamma_rhs_into(v, tau, lift, p, out);
  return DiscreteField(v.grid(), std::move(out));
}

std::pair<DiscreteField, DiscreteField> lift_state(const DiscreteField& v,
                                                   const DiscreteField& tau,
                                                   const BoundaryLift& lift,
                                                   const ModelParams& p) {
  require_same_grid(v, tau, "lift_state");
  DiscreteField u(v.grid(), v.values() + lift.phi_interior.values());
  DiscreteField sigma(v.grid(), tau.values() + p.nu * v.values() +
                                    lift.phi_stress_interior.values());
  return {std::move(u), std::move(sigma)};
}

std::pair<DiscreteField, DiscreteField> drop_state(const DiscreteField& u,
                                                   const DiscreteField& sigma,
                                                   const BoundaryLift& lift,
                                                   const ModelParams& p) {
  require_same_grid(u, sigma, "drop_state");
  Eigen::VectorXd v = u.values() - lift.phi_interior.values();
  Eigen::VectorXd tau =
      sigma.values() - lift.phi_stress_interior.values() - p.nu * v;
  return {DiscreteField(u.grid(), std::move(v)),
          DiscreteField(u.grid(), std::move(tau))};
}

LipschitzBounds stress_term_lipschitz(const ModelParams& p) {
  p.validate();
  LipschitzBounds out;
  // Outside l1 radius 2 R_cut the reaction is beta_inf * sigma.
  out.L_sigma = p.beta_inf;
  if (!std::isfinite(p.R_cut)) {
    // No cutoff: the tanh profile's derivative is unbounded times sigma, so a
    // finite global bound does not exist. Callers require a finite cutoff.
    throw Error("stress Lipschitz bounds: require a finite cutoff radius");
  }
  const double lim = 2.0 * p.R_cut;
  const int n = 600;
  for (int i = 0; i <= n; ++i) {
    const double u = -lim + 2.0 * lim * i / n;
    for (int j = 0; j <= n; ++j) {
      const double sigma = -lim + 2.0 * lim * j / n;
      const double gu = beta0_du(u, sigma, p) * sigma;
      const double gs = beta0(u, sigma, p) + beta0_dsigma(u, sigma, p) * sigma;
      out.L_u = std::max(out.L_u, std::abs(gu));
      out.L_sigma = std::max(out.L_sigma, std::abs(gs));
    }
  }
  out.L_u *= 1.05;
  out.L_sigma *= 1.05;
  return out;
}

}  // namespace polydiff
