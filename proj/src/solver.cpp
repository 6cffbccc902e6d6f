#include "polydiff/solver.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace polydiff {

Scheme scheme_from_name(const std::string& name) {
  if (name == "imex-euler") return Scheme::ImexEuler;
  if (name == "imex-cn") return Scheme::ImexCN;
  throw ConfigError("solver.scheme: expected \"imex-euler\" or \"imex-cn\", got \"" +
                    name + "\"");
}

std::string scheme_name(Scheme s) {
  return s == Scheme::ImexEuler ? "imex-euler" : "imex-cn";
}

double SolverConfig::default_dt(const GridSpec& g, const ModelParams& p) {
  double h = g.spacing(0);
  if (g.dimension == 2) h = std::min(h, g.spacing(1));
  return std::min(0.25 / p.beta_R, h);
}

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error("solver: dt must be positive");
  if (!(t_end >= 0.0)) throw Error("solver: t_end must be nonnegative");
  if (sample_stride < 1) throw Error("solver: sample_stride must be >= 1");
  if (!(max_value_guard > 0.0)) throw Error("solver: guard must be positive");
}

ImexStepper::ImexStepper(const DiscreteOperators& ops, const BoundaryLift& lift,
                         const ModelParams& p, const SolverConfig& cfg)
    : ops_(ops), lift_(lift), p_(p), cfg_(cfg) {
  p_.validate();
  cfg_.validate();
  if (!(lift.phi_interior.grid() == ops.grid()))
    throw Error("stepper: lift grid does not match the operators");
  theta_ = cfg_.scheme == Scheme::ImexEuler ? 1.0 : 0.5;

  const int n = ops_.grid().total_nodes();
  SparseMat ident(n, n);
  ident.setIdentity();
  SparseMat m = ident - (theta_ * cfg_.dt * p_.d()) * ops_.laplacian();
  implicit_ = std::make_unique<Eigen::SimplicialLDLT<SparseMat>>();
  implicit_->compute(m);
  if (implicit_->info() != Eigen::Success)
    throw Error("stepper: implicit operator factorization failed");
}

Eigen::VectorXd ImexStepper::solve_implicit(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = implicit_->solve(rhs);
  if (implicit_->info() != Eigen::Success)
    throw Error("stepper: implicit solve failed");
  return x;
}

void ImexStepper::check_state(const Eigen::VectorXd& v,
                              const Eigen::VectorXd& tau, long step_index,
                              double t) const {
  const bool finite = v.allFinite() && tau.allFinite();
  const double vmax = finite ? v.cwiseAbs().maxCoeff() : 0.0;
  if (!finite || vmax > cfg_.max_value_guard) {
    throw DivergenceError(
        "step " + std::to_string(step_index) + " (t=" + std::to_string(t) +
            "): " +
            (finite ? "max |v| exceeded the divergence guard" : "non-finite state"),
        step_index);
  }
}

State ImexStepper::step(const State& s, long step_index,
                        const Forcing* forcing) const {
  if (!(s.grid() == ops_.grid()))
    throw Error("stepper: state grid does not match the operators");
  const double dt = cfg_.dt;
  const double t = s.t;
  const Eigen::VectorXd& v = s.v.values();
  const Eigen::VectorXd& tau = s.tau.values();
  const SparseMat& lap = ops_.laplacian();
  const Eigen::VectorXd& h = lift_.h_field.values();

  auto fv = [&](double at) -> Eigen::VectorXd {
    if (forcing && forcing->f_v) return forcing->f_v(at);
    return Eigen::VectorXd::Zero(v.size());
  };
  auto ftau = [&](double at) -> Eigen::VectorXd {
    if (forcing && forcing->f_tau) return forcing->f_tau(at);
    return Eigen::VectorXd::Zero(v.size());
  };

  Eigen::VectorXd tau_new, tau_star, gam;
  if (cfg_.freeze_tau) {
    tau_new = tau;
    tau_star = tau;
  } else if (cfg_.scheme == Scheme::ImexEuler || cfg_.freeze_v) {
    // RK2 midpoint on tau' = gamma with v held at v_n.
    gamma_rhs_into(s.v, s.tau, lift_, p_, gam);
    Eigen::VectorXd tau_half = tau + 0.5 * dt * (gam + ftau(t));
    DiscreteField tau_half_f(s.grid(), std::move(tau_half));
    gamma_rhs_into(s.v, tau_half_f, lift_, p_, gam);
    tau_new = tau + dt * (gam + ftau(t + 0.5 * dt));
    tau_star = cfg_.scheme == Scheme::ImexEuler ? tau_new
                                                : 0.5 * (tau + tau_new);
  } else {
    // Midpoint predictor for v (implicit half step, tau frozen), so the
    // second stress stage sees a stage-consistent v.
    Eigen::VectorXd rhs = v + 0.5 * dt * (p_.E * (lap * tau) + h + fv(t));
    Eigen::VectorXd v_half = solve_implicit(rhs);
    DiscreteField v_half_f(s.grid(), std::move(v_half));

    gamma_rhs_into(s.v, s.tau, lift_, p_, gam);
    Eigen::VectorXd tau_half = tau + 0.5 * dt * (gam + ftau(t));
    DiscreteField tau_half_f(s.grid(), std::move(tau_half));
    gamma_rhs_into(v_half_f, tau_half_f, lift_, p_, gam);
    tau_new = tau + dt * (gam + ftau(t + 0.5 * dt));
    tau_star = 0.5 * (tau + tau_new);
  }

  Eigen::VectorXd v_new;
  if (cfg_.freeze_v) {
    v_new = v;
  } else if (cfg_.scheme == Scheme::ImexEuler) {
    v_new = solve_implicit(v + dt * (p_.E * (lap * tau_star) + h + fv(t + dt)));
  } else {
    v_new = solve_implicit(v + 0.5 * dt * p_.d() * (lap * v) +
                           dt * (p_.E * (lap * tau_star) + h +
                                 fv(t + 0.5 * dt)));
  }

  check_state(v_new, tau_new, step_index, t + dt);
  return State(t + dt, DiscreteField(s.grid(), std::move(v_new)),
               DiscreteField(s.grid(), std::move(tau_new)));
}

TrajectoryRecord integrate(const State& s0, const SolverConfig& cfg,
                           const DiscreteOperators& ops,
                           const BoundaryLift& lift, const ModelParams& p,
                           const Forcing* forcing) {
  cfg.validate();
  if (!s0.v.all_finite() || !s0.tau.all_finite())
    throw Error("integrate: initial state has non-finite values");
  ImexStepper stepper(ops, lift, p, cfg);

  const long n_steps = std::lround(cfg.t_end / cfg.dt);
  TrajectoryRecord rec;
  rec.sample_dt = cfg.dt * cfg.sample_stride;

  auto push_sample = [&](const State& s, long k) {
    // Samples carry the record clock (exact multiples of sample_dt), not the
    // accumulated stepping clock, so shifted records compose bit-exactly.
    const double tk =
        static_cast<double>(k / cfg.sample_stride) * rec.sample_dt;
    State snap = s;
    snap.t = tk;
    rec.times.push_back(tk);
    rec.energy.push_back(make_energy_record(snap, ops, p));
    rec.states.push_back(std::move(snap));
  };

  State s = s0;
  push_sample(s, 0);
  for (long k = 1; k <= n_steps; ++k) {
    try {
      s = stepper.step(s, k, forcing);
    } catch (const DivergenceError& e) {
      rec.divergence = DivergenceInfo{e.step_index(), s.t, e.what()};
      break;
    }
    if (k % cfg.sample_stride == 0) push_sample(s, k);
  }
  rec.validate();
  return rec;
}

GronwallData gronwall_constant(const ModelParams& p,
                               const DiscreteOperators& ops) {
  GronwallData g;
  g.lip = stress_term_lipschitz(p);
  const double m = std::min(0.5 * p.nu * p.D, 0.5 * p.E);
  g.c_hat = p.E * (0.5 * g.lip.L_u + g.lip.L_sigma) / (2.0 * m);
  const double m0 =
      std::max(0.5 * p.mu / ops.lambda1() + 0.5 * p.nu * p.D, 0.5 * p.E);
  g.prefactor = std::sqrt(m0 / m);
  return g;
}

std::vector<PhysicalSample> recover_u_sigma(const TrajectoryRecord& traj,
                                            const BoundaryLift& lift,
                                            const ModelParams& p) {
  std::vector<PhysicalSample> out;
  out.reserve(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    auto [u, sigma] =
        lift_state(traj.states[k].v, traj.states[k].tau, lift, p);
    out.push_back({traj.times[k], std::move(u), std::move(sigma)});
  }
  return out;
}

}  // namespace polydiff
