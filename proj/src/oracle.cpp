#include "polydiff/oracle.hpp"

#include <cmath>

namespace polydiff {

namespace {

// Cubic Hermite value on the unit parameter with endpoint values/derivatives
// (derivatives pre-scaled by the interval length).
double hermite(double y0, double m0, double y1, double m1, double th) {
  const double t2 = th * th, t3 = t2 * th;
  return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + th) * m0 +
         (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
}

struct SubstepWorkspace {
  double u[9];
  double vs[9];  // varsigma along the interval
  double b[9];
  double B[9];  // cumulative integral of beta0
};

// Advances varsigma across [t0, t0+dt] using the integrating-factor
// representation: varsigma(t0+dt) = varsigma(t0) e^{-B} + int e^{B(s)-B} *
// (mu - nu beta0) u ds, with beta0 evaluated along the current Hermite model
// of varsigma and iterated to self-consistency.
double stress_substep(const StressODEProblem& prob, double t0, double dt,
                      double vs0) {
  const ModelParams& p = prob.params;
  SubstepWorkspace w;
  const double h = dt / 8.0;
  for (int j = 0; j < 9; ++j) w.u[j] = prob.u_path(t0 + h * j);

  auto rate = [&](int j, double vs) {
    return beta0(w.u[j], p.nu * w.u[j] + vs, p);
  };
  auto slope = [&](int j, double vs) {
    const double b = rate(j, vs);
    return -b * vs + (p.mu - p.nu * b) * w.u[j];
  };

  const double f0 = slope(0, vs0);
  double vs1 = vs0 + dt * f0;  // Euler predictor
  double prev = vs1;
  for (int iter = 0; iter < 100; ++iter) {
    const double f1 = slope(8, vs1);
    for (int j = 0; j < 9; ++j)
      w.vs[j] = hermite(vs0, dt * f0, vs1, dt * f1, j / 8.0);
    for (int j = 0; j < 9; ++j) w.b[j] = rate(j, w.vs[j]);

    // Cumulative quadrature of beta0 at quartic order: Simpson pairs for even
    // nodes, one-sided quadratic rules for odd nodes.
    w.B[0] = 0.0;
    w.B[1] = (h / 12.0) * (5.0 * w.b[0] + 8.0 * w.b[1] - w.b[2]);
    for (int j = 2; j < 9; ++j) {
      if (j % 2 == 0)
        w.B[j] = w.B[j - 2] + (h / 3.0) * (w.b[j - 2] + 4.0 * w.b[j - 1] + w.b[j]);
      else
        w.B[j] =
            w.B[j - 1] + (h / 12.0) * (-w.b[j - 2] + 8.0 * w.b[j - 1] + 5.0 * w.b[j]);
    }

    double forcing = 0.0;
    auto phi = [&](int j) {
      return std::exp(w.B[j] - w.B[8]) * (p.mu - p.nu * w.b[j]) * w.u[j];
    };
    for (int m = 0; m < 4; ++m)
      forcing += (h / 3.0) * (phi(2 * m) + 4.0 * phi(2 * m + 1) + phi(2 * m + 2));

    const double next = vs0 * std::exp(-w.B[8]) + forcing;
    if (std::abs(next - vs1) <= 1e-13 * std::max(1.0, std::abs(next))) return next;
    if (iter > 0 && std::abs(next - prev) <= 1e-13 * std::max(1.0, std::abs(next)))
      return next;
    prev = vs1;
    vs1 = next;
  }
  throw Error("stress oracle: self-consistency iteration did not converge");
}

double stress_eval_with_n(const StressODEProblem& prob, double t, int n) {
  const double dt = t / n;
  double vs = prob.varsigma0;
  for (int k = 0; k < n; ++k) vs = stress_substep(prob, k * dt, dt, vs);
  return vs;
}

}  // namespace

double stress_closed_form(const StressODEProblem& prob, double t,
                          double* achieved_err) {
  prob.params.validate();
  if (!prob.u_path) throw Error("stress oracle: missing concentration path");
  if (!(t >= 0.0)) throw Error("stress oracle: negative time");
  if (t == 0.0) {
    if (achieved_err) *achieved_err = 0.0;
    return prob.varsigma0;
  }
  double prev = stress_eval_with_n(prob, t, 64);
  for (int n = 128; n <= 1 << 17; n *= 2) {
    const double val = stress_eval_with_n(prob, t, n);
    const double diff = std::abs(val - prev);
    if (diff <= 1e-10 * std::max(1.0, std::abs(val))) {
      if (achieved_err) *achieved_err = diff;
      return val;
    }
    prev = val;
  }
  throw Error("stress oracle: quadrature refinement did not reach 1e-10");
}

double stress_bound_value(double t, double varsigma0_abs, const ModelParams& p) {
  return std::exp(-t * p.beta_G) * varsigma0_abs + (p.mu + p.nu * p.beta_R) / p.beta_G;
}

DiscreteField ManufacturedSolution::sample_v(const GridSpec& g, double t) const {
  return DiscreteField::from_function(
      g, [&](double x, double y) { return v(t, x, y); });
}

DiscreteField ManufacturedSolution::sample_tau(const GridSpec& g,
                                               double t) const {
  return DiscreteField::from_function(
      g, [&](double x, double y) { return tau(t, x, y); });
}

ManufacturedSolution default_manufactured_solution(const GridSpec& g) {
  const double pi = std::acos(-1.0);
  ManufacturedSolution ms;
  if (g.dimension == 1) {
    const double kx = pi / g.length[0];
    ms.v = [=](double t, double x, double) { return std::exp(-t) * std::sin(kx * x); };
    ms.v_t = [=](double t, double x, double) {
      return -std::exp(-t) * std::sin(kx * x);
    };
    ms.lap_v = [=](double t, double x, double) {
      return -kx * kx * std::exp(-t) * std::sin(kx * x);
    };
    const double kx2 = 2.0 * pi / g.length[0];
    ms.tau = [=](double t, double x, double) {
      return 0.5 * std::exp(-0.5 * t) * std::sin(kx2 * x);
    };
    ms.tau_t = [=](double t, double x, double) {
      return -0.25 * std::exp(-0.5 * t) * std::sin(kx2 * x);
    };
    ms.lap_tau = [=](double t, double x, double) {
      return -kx2 * kx2 * 0.5 * std::exp(-0.5 * t) * std::sin(kx2 * x);
    };
  } else {
    const double kx = pi / g.length[0], ky = pi / g.length[1];
    ms.v = [=](double t, double x, double y) {
      return std::exp(-t) * std::sin(kx * x) * std::sin(ky * y);
    };
    ms.v_t = [=](double t, double x, double y) {
      return -std::exp(-t) * std::sin(kx * x) * std::sin(ky * y);
    };
    ms.lap_v = [=](double t, double x, double y) {
      return -(kx * kx + ky * ky) * std::exp(-t) * std::sin(kx * x) *
             std::sin(ky * y);
    };
    const double qx = 2.0 * pi / g.length[0];
    ms.tau = [=](double t, double x, double y) {
      return 0.5 * std::exp(-0.5 * t) * std::sin(qx * x) * std::sin(ky * y);
    };
    ms.tau_t = [=](double t, double x, double y) {
      return -0.25 * std::exp(-0.5 * t) * std::sin(qx * x) * std::sin(ky * y);
    };
    ms.lap_tau = [=](double t, double x, double y) {
      return -(qx * qx + ky * ky) * 0.5 * std::exp(-0.5 * t) * std::sin(qx * x) *
             std::sin(ky * y);
    };
  }
  return ms;
}

Forcing manufactured_forcing(const ManufacturedSolution& ms, const GridSpec& g,
                             const BoundaryLift& lift, const ModelParams& p) {
  // Capture everything by value so the forcing outlives the caller's lift.
  const Eigen::VectorXd h = lift.h_field.values();
  const Eigen::VectorXd phi = lift.phi_interior.values();
  const Eigen::VectorXd phis = lift.phi_stress_interior.values();
  const ModelParams params = p;
  const GridSpec grid = g;
  ManufacturedSolution sol = ms;

  Forcing f;
  f.f_v = [=](double t) {
    Eigen::VectorXd out(grid.total_nodes());
    for (int iy = 0; iy < grid.count[1]; ++iy) {
      const double y = grid.dimension == 2 ? grid.coord(1, iy) : 0.0;
      for (int ix = 0; ix < grid.count[0]; ++ix) {
        const double x = grid.coord(0, ix);
        const int k = grid.node_index(ix, iy);
        out[k] = sol.v_t(t, x, y) - params.d() * sol.lap_v(t, x, y) -
                 params.E * sol.lap_tau(t, x, y) - h[k];
      }
    }
    return out;
  };
  f.f_tau = [=](double t) {
    Eigen::VectorXd out(grid.total_nodes());
    for (int iy = 0; iy < grid.count[1]; ++iy) {
      const double y = grid.dimension == 2 ? grid.coord(1, iy) : 0.0;
      for (int ix = 0; ix < grid.count[0]; ++ix) {
        const double x = grid.coord(0, ix);
        const int k = grid.node_index(ix, iy);
        out[k] = sol.tau_t(t, x, y) -
                 gamma_point(sol.v(t, x, y), sol.tau(t, x, y), phi[k], phis[k],
                             params);
      }
    }
    return out;
  };
  return f;
}

namespace {

struct DenseSystem {
  Eigen::MatrixXd lap;
  const BoundaryLift& lift;
  const ModelParams& p;
  const Forcing* forcing;
  const GridSpec& grid;

  void rhs(double t, const Eigen::VectorXd& v, const Eigen::VectorXd& tau,
           Eigen::VectorXd& dv, Eigen::VectorXd& dtau) const {
    dv = p.d() * (lap * v) + p.E * (lap * tau) + lift.h_field.values();
    if (forcing && forcing->f_v) dv += forcing->f_v(t);
    dtau.resize(v.size());
    const Eigen::VectorXd& phi = lift.phi_interior.values();
    const Eigen::VectorXd& phis = lift.phi_stress_interior.values();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      dtau[i] = gamma_point(v[i], tau[i], phi[i], phis[i], p);
    if (forcing && forcing->f_tau) dtau += forcing->f_tau(t);
  }

  void rk4_substeps(double t0, double dt, int substeps, Eigen::VectorXd& v,
                    Eigen::VectorXd& tau) const {
    const double hs = dt / substeps;
    Eigen::VectorXd k1v, k1t, k2v, k2t, k3v, k3t, k4v, k4t, vv, tt;
    for (int m = 0; m < substeps; ++m) {
      const double t = t0 + m * hs;
      rhs(t, v, tau, k1v, k1t);
      vv = v + 0.5 * hs * k1v;
      tt = tau + 0.5 * hs * k1t;
      rhs(t + 0.5 * hs, vv, tt, k2v, k2t);
      vv = v + 0.5 * hs * k2v;
      tt = tau + 0.5 * hs * k2t;
      rhs(t + 0.5 * hs, vv, tt, k3v, k3t);
      vv = v + hs * k3v;
      tt = tau + hs * k3t;
      rhs(t + hs, vv, tt, k4v, k4t);
      v += (hs / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      tau += (hs / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    }
  }
};

DenseSystem make_dense_system(const DiscreteOperators& ops,
                              const BoundaryLift& lift, const ModelParams& p,
                              const Forcing* forcing) {
  if (ops.grid().total_nodes() > 512)
    throw Error("dense reference: grid exceeds the 512-node guard");
  return DenseSystem{Eigen::MatrixXd(ops.laplacian()), lift, p, forcing,
                     ops.grid()};
}

}  // namespace

State dense_reference_step(const State& s, double dt,
                           const DiscreteOperators& ops,
                           const BoundaryLift& lift, const ModelParams& p,
                           const Forcing* forcing) {
  DenseSystem sys = make_dense_system(ops, lift, p, forcing);
  Eigen::VectorXd v = s.v.values(), tau = s.tau.values();
  sys.rk4_substeps(s.t, dt, 100, v, tau);
  return State(s.t + dt, DiscreteField(s.grid(), std::move(v)),
               DiscreteField(s.grid(), std::move(tau)));
}

State dense_reference_integrate(const State& s0, double t_end, double macro_dt,
                                const DiscreteOperators& ops,
                                const BoundaryLift& lift, const ModelParams& p,
                                const Forcing* forcing) {
  DenseSystem sys = make_dense_system(ops, lift, p, forcing);
  const long n = std::lround(t_end / macro_dt);
  Eigen::VectorXd v = s0.v.values(), tau = s0.tau.values();
  for (long k = 0; k < n; ++k)
    sys.rk4_substeps(s0.t + k * macro_dt, macro_dt, 100, v, tau);
  return State(s0.t + n * macro_dt, DiscreteField(s0.grid(), std::move(v)),
               DiscreteField(s0.grid(), std::move(tau)));
}

}  // namespace polydiff
