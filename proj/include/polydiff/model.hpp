#pragma once

#include <array>
#include <vector>

#include "polydiff/grid.hpp"

namespace polydiff {

/// Physical and constitutive parameters of the concentration/stress system
///   u_t = D lap u + E lap sigma,
///   sigma_t + beta0(u, sigma) sigma = mu u + nu u_t,
/// with Dirichlet data lifted away so the evolved unknowns (v, tau) vanish on
/// the boundary. The relaxation rate beta0 follows a tanh profile between the
/// rubbery and glassy rates, flattened to beta_inf outside a large cutoff so
/// it stays bounded with bounded derivatives.
struct ModelParams {
  double D = 1.0;   // concentration diffusivity, > 0
  double E = 1.0;   // stress diffusivity, > 0
  double mu = 0.5;  // relaxation coupling, >= 0
  double nu = 1.0;  // viscosity coupling, > 0

  double beta_R = 1.0;        // rubbery rate, > beta_G
  double beta_G = 0.5;        // glassy rate, > 0
  double delta_beta = 0.25;   // transition width, > 0
  double u_RG = 0.5;          // transition center
  double beta_inf = 0.75;     // far-field rate, in [beta_G, beta_R]
  double R_cut = 18.0;        // cutoff radius in |u|+|sigma|, > 0 (inf allowed)
  double beta_sigma_coupling = 0.0;  // optional stress dependence of the profile

  /// Combined diffusivity of the transformed concentration equation.
  double d() const { return D + nu * E; }
  void validate() const;
};

/// Relaxation rate beta0(u, sigma) and its partial derivatives. Inside the
/// cutoff radius this is the tanh profile; beyond twice the radius it is
/// beta_inf; in between, a quintic smoothstep blend in the l1 radius
/// |u|+|sigma|. The value always lies in [beta_G, beta_R].
double beta0(double u, double sigma, const ModelParams& p);
double beta0_du(double u, double sigma, const ModelParams& p);
double beta0_dsigma(double u, double sigma, const ModelParams& p);

/// Solves beta0(phi, s) * s = mu * phi for s (the stress boundary datum
/// matched to a concentration datum). Safeguarded Newton/bisection on a
/// bracket guaranteed by beta0 >= beta_G > 0; residual driven below 1e-12.
double solve_boundary_compat(double phi_value, const ModelParams& p);

/// Closed-form boundary data presets. All are C2 on the closed domain.
struct BoundaryPreset {
  enum class Kind { Constant, RampX, Bump, Tabulated };
  Kind kind = Kind::Constant;
  double value = 0.0;                  // Constant
  double from = 0.0, to = 0.0;         // RampX: endpoints at x=0 and x=Lx
  double amplitude = 0.0;              // Bump
  std::array<double, 2> center{0.5, 0.5};
  double width = 0.15;
  std::vector<double> table;           // Tabulated: closed-grid values

  static BoundaryPreset homogeneous();
  static BoundaryPreset constant(double value);
  static BoundaryPreset ramp_x(double from, double to);
  static BoundaryPreset bump(double amplitude, std::array<double, 2> center,
                             double width);
  static BoundaryPreset tabulated(std::vector<double> closed_values);

  double evaluate(const GridSpec& g, double x, double y) const;
  /// Analytic Laplacian where the preset has one (constant/ramp: 0; bump:
  /// closed form). Tabulated presets have none; callers fall back to the
  /// discrete stencil.
  bool has_analytic_laplacian() const { return kind != Kind::Tabulated; }
  double laplacian(const GridSpec& g, double x, double y) const;
  /// Upper bound for |phi| over the closed domain (used by the cutoff rule).
  double max_abs_bound(const GridSpec& g) const;
};

/// Default cutoff radius rule: 10 * (1 + max|phi| + max|phi_stress|), with the
/// stress lift bounded through the compatibility relation.
double default_cutoff_radius(const BoundaryPreset& preset, const GridSpec& g,
                             double mu, double beta_G);

/// The boundary lift pair (phi, phi_stress) on the closed grid together with
/// the induced constant forcing h = D lap phi + E lap phi_stress at the
/// interior nodes. phi_stress is always derived pointwise from phi by the
/// compatibility solve, so the compatibility identity holds everywhere on the
/// closed grid by construction.
struct BoundaryLift {
  ClosedField phi;
  ClosedField phi_stress;
  DiscreteField h_field;
  DiscreteField phi_interior;         // cached restriction of phi
  DiscreteField phi_stress_interior;  // cached restriction of phi_stress
  bool homogeneous = false;
};

BoundaryLift make_homogeneous_lift(const GridSpec& g);
BoundaryLift make_lift(const GridSpec& g, const BoundaryPreset& preset,
                       const ModelParams& p);

/// Pointwise reaction term of the transformed stress equation tau_t = gamma.
/// Algebraically gamma(x, v, tau) = mu*u - beta0(u, sigma)*sigma with
/// u = v + phi(x) and sigma = tau + nu*v + phi_stress(x); it vanishes at the
/// rest state because of the compatibility construction of phi_stress.
double gamma_point(double v, double tau, double phi, double phi_stress,
                   const ModelParams& p);
DiscreteField gamma_rhs(const DiscreteField& v, const DiscreteField& tau,
                        const BoundaryLift& lift, const ModelParams& p);
void gamma_rhs_into(const DiscreteField& v, const DiscreteField& tau,
                    const BoundaryLift& lift, const ModelParams& p,
                    Eigen::VectorXd& out);

/// Change of variables between the evolved homogeneous unknowns (v, tau) and
/// the physical fields (u, sigma): u = v + phi, sigma = tau + nu v + phi_stress.
std::pair<DiscreteField, DiscreteField> lift_state(const DiscreteField& v,
                                                   const DiscreteField& tau,
                                                   const BoundaryLift& lift,
                                                   const ModelParams& p);
std::pair<DiscreteField, DiscreteField> drop_state(const DiscreteField& u,
                                                   const DiscreteField& sigma,
                                                   const BoundaryLift& lift,
                                                   const ModelParams& p);

/// Global Lipschitz bounds of the stress reaction G(u, sigma) =
/// beta0(u, sigma) * sigma: L_u >= sup|dG/du|, L_sigma >= sup|dG/dsigma|.
/// Dense-sampled suprema of the analytic partials over the square where they
/// can be nonzero (l1 radius <= 2 R_cut), inflated by 5%.
struct LipschitzBounds {
  double L_u = 0.0;
  double L_sigma = 0.0;
};
LipschitzBounds stress_term_lipschitz(const ModelParams& p);

}  // namespace polydiff
