#include "polydiff/checks.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "polydiff/io.hpp"
#include "polydiff/oracle.hpp"
#include "polydiff/random_fields.hpp"
#include "polydiff/runner.hpp"

namespace polydiff {

namespace {

namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

/// The standard certification configuration (mirrors configs/default_1d.json):
/// unit interval, 128 interior nodes, Gaussian-bump boundary data, imex-cn
/// with dt 0.005 and stride 20 so samples land every 0.1 and the shift list
/// {0,5,10,20,40} aligns exactly.
RunConfig standard_config_1d() {
  RunConfig c;
  c.dt = 0.005;
  return c;
}

struct Setup {
  GridSpec grid;
  ModelParams params;
  BoundaryPreset preset;
  SolverConfig solver;
  DiscreteOperators ops;
  BoundaryLift lift;
};

Setup build_setup(const RunConfig& c) {
  GridSpec g = make_grid(c);
  ModelParams p = make_params(c);
  BoundaryPreset b = make_preset(c);
  return Setup{g,      p, b, make_solver(c), DiscreteOperators::build(g),
               make_lift(g, b, p)};
}

std::string fmt(double x) { return format_double(x); }

bool vec_bitwise_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(),
                      sizeof(double) * static_cast<std::size_t>(a.size())) ==
              0);
}

bool records_bitwise_equal(const TrajectoryRecord& a,
                           const TrajectoryRecord& b) {
  if (a.times != b.times || a.states.size() != b.states.size()) return false;
  for (std::size_t k = 0; k < a.states.size(); ++k)
    if (!vec_bitwise_equal(a.states[k].v.values(), b.states[k].v.values()) ||
        !vec_bitwise_equal(a.states[k].tau.values(),
                           b.states[k].tau.values()))
      return false;
  return true;
}

DiscreteField random_uniform_field(const GridSpec& g, Rng& rng) {
  Eigen::VectorXd vals(g.total_nodes());
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    vals[i] = rng.uniform(-1.0, 1.0);
  return DiscreteField(g, std::move(vals));
}

double lsq_slope(std::span<const double> x, std::span<const double> y) {
  const int m = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

bool files_byte_equal(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return sa.str() == sb.str();
}

}  // namespace

CheckResult check_calculus_identities() {
  CheckResult res{"discrete calculus identities (duality, Friedrichs, "
                  "spectral norm)",
                  true, ""};
  double worst_duality = 0.0;
  double worst_friedrichs = 0.0;  // positive part of ||f|| - K ||f||_H1
  double worst_e1 = 0.0;
  double worst_delta1 = 0.0;

  const GridSpec grids[] = {GridSpec::line(1.0, 128),
                            GridSpec::rectangle(1.0, 1.0, 32, 32)};
  for (const GridSpec& g : grids) {
    const DiscreteOperators ops = DiscreteOperators::build(g);
    Rng rng(Rng::derive(42, 100 + g.dimension));

    for (int k = 0; k < 100; ++k) {
      const DiscreteField u = random_uniform_field(g, rng);
      const DiscreteField v = random_uniform_field(g, rng);
      const DiscreteField lap_v = ops.apply_laplacian(v);
      const double resid =
          std::abs(inner_hm1(u, lap_v, ops) + inner_l2(u, v));
      worst_duality =
          std::max(worst_duality, resid / (norm_l2(u) * norm_l2(v)));
    }

    const double K = ops.friedrichs_constant();
    for (int k = 0; k < 1000; ++k) {
      const DiscreteField f = random_uniform_field(g, rng);
      const double overshoot = norm_l2(f) - K * norm_h1(f, ops);
      worst_friedrichs = std::max(worst_friedrichs, overshoot / norm_l2(f));
    }
    const DiscreteField e1 = ops.eigenfield(0);
    worst_e1 = std::max(worst_e1, std::abs(norm_l2(e1) - K * norm_h1(e1, ops)) /
                                      norm_l2(e1));

    for (int k = 0; k < 20; ++k) {
      const DiscreteField f = random_uniform_field(g, rng);
      const double a = norm_hmdelta(f, ops, 1.0);
      const double b = norm_hm1(f, ops);
      worst_delta1 = std::max(worst_delta1, std::abs(a - b) / b);
    }
  }

  res.ok = worst_duality <= 1e-8 && worst_friedrichs <= 1e-12 &&
           worst_e1 <= 1e-8 && worst_delta1 <= 1e-8;
  res.detail = "duality resid " + fmt(worst_duality) +
               ", Friedrichs overshoot " + fmt(worst_friedrichs) +
               ", e1 equality gap " + fmt(worst_e1) + ", order -1 norm gap " +
               fmt(worst_delta1) + " (1d n=128 and 2d 32x32)";
  return res;
}

CheckResult check_negative_norm_value() {
  CheckResult res{"negative-norm value of sin(pi x) with grid refinement",
                  true, ""};
  const double exact = 1.0 / (kPi * std::sqrt(2.0));
  std::vector<double> errs;
  for (const int n : {31, 63, 127}) {
    const GridSpec g = GridSpec::line(1.0, n);
    const DiscreteOperators ops = DiscreteOperators::build(g);
    const DiscreteField f = DiscreteField::from_function(
        g, [](double x, double) { return std::sin(kPi * x); });
    errs.push_back(std::abs(norm_hm1(f, ops) - exact));
  }
  const double o1 = std::log2(errs[0] / errs[1]);
  const double o2 = std::log2(errs[1] / errs[2]);
  res.ok = o1 >= 1.8 && o1 <= 2.2 && o2 >= 1.8 && o2 <= 2.2;
  res.detail = "limit " + fmt(exact) + ", observed orders " + fmt(o1) + ", " +
               fmt(o2) + " (need 2.0 +/- 0.2)";
  return res;
}

CheckResult check_mms_convergence() {
  CheckResult res{"manufactured-solution convergence orders", true, ""};
  const RunConfig c = standard_config_1d();
  const std::vector<int> sizes{15, 31, 63};
  const std::vector<MmsSpatialRow> spatial =
      mms_spatial_study(c, sizes, 5e-4, 0.5);
  bool spatial_ok = true;
  for (std::size_t i = 1; i < spatial.size(); ++i)
    spatial_ok =
        spatial_ok && spatial[i].order >= 1.8 && spatial[i].order <= 2.2;

  const std::vector<double> dts{0.025, 0.0125, 0.00625, 0.003125};
  const MmsTemporalStudy temporal = mms_temporal_study(c, 48, dts, 1.0);

  res.ok = spatial_ok && temporal.slope_euler >= 0.9 &&
           temporal.slope_cn >= 1.8;
  res.detail = "spatial orders " + fmt(spatial[1].order) + ", " +
               fmt(spatial[2].order) + " (need 2.0 +/- 0.2); temporal slopes " +
               fmt(temporal.slope_euler) + " (euler, need >= 0.9), " +
               fmt(temporal.slope_cn) + " (cn, need >= 1.8)";
  return res;
}

CheckResult check_stress_oracle() {
  CheckResult res{"pointwise stress law vs closed form and long-time bound",
                  true, ""};

  // (a) Frozen-concentration solver agrees with the closed form at the
  // stress stage's temporal order. With v frozen, tau at each node obeys the
  // pointwise stress ODE after the constant offset (phi_stress - nu phi).
  RunConfig cfg = standard_config_1d();
  cfg.counts = {16, 1};
  Setup s = build_setup(cfg);
  Rng rng(Rng::derive(42, 40));
  DiscreteField v0 = random_eigen_field(s.ops, rng, 8, 1.0, 0.2);
  DiscreteField tau0 = random_eigen_field(s.ops, rng, 8, 1.0, 0.3);
  const State s0(0.0, v0, tau0);
  const std::vector<int> nodes{1, 5, 8, 11, 14};
  const double t_final = 2.0;

  std::vector<double> reference(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const int i = nodes[j];
    const double phi = s.lift.phi_interior.values()[i];
    const double offset =
        s.lift.phi_stress_interior.values()[i] - s.params.nu * phi;
    const double u_const = v0.values()[i] + phi;
    StressODEProblem prob;
    prob.u_path = [u_const](double) { return u_const; };
    prob.varsigma0 = tau0.values()[i] + offset;
    prob.params = s.params;
    reference[j] = stress_closed_form(prob, t_final);
  }

  std::vector<double> log_dt, log_err;
  for (const double dt : {0.1, 0.05, 0.025, 0.0125}) {
    SolverConfig sc = s.solver;
    sc.dt = dt;
    sc.t_end = t_final;
    sc.freeze_v = true;
    sc.sample_stride = static_cast<int>(std::lround(t_final / dt));
    const TrajectoryRecord rec =
        integrate(s0, sc, s.ops, s.lift, s.params);
    const Eigen::VectorXd& tau_T = rec.states.back().tau.values();
    double err = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const int i = nodes[j];
      const double offset = s.lift.phi_stress_interior.values()[i] -
                            s.params.nu * s.lift.phi_interior.values()[i];
      err = std::max(err, std::abs(tau_T[i] + offset - reference[j]));
    }
    log_dt.push_back(std::log(dt));
    log_err.push_back(std::log(err));
  }
  const double slope = lsq_slope(log_dt, log_err);

  // (b) Long-time bound on 100 random bounded concentration paths, and the
  // eventual bound by t = 10/beta_G.
  const ModelParams p = s.params;
  const double tail = (p.mu + p.nu * p.beta_R) / p.beta_G;
  const double t_eventual = 10.0 / p.beta_G;
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_eventual = 0.0;
  for (int k = 0; k < 100; ++k) {
    Rng prng(Rng::derive(777, static_cast<std::uint64_t>(k)));
    std::array<double, 4> amp{}, omega{}, phase{};
    double sum = 0.0;
    for (auto& a : amp) {
      a = prng.uniform(-1.0, 1.0);
      sum += std::abs(a);
    }
    const double target = prng.uniform(0.2, 1.0);
    for (auto& a : amp) a *= target / sum;
    for (auto& w : omega) w = prng.uniform(0.2, 1.5);
    for (auto& th : phase) th = prng.uniform(0.0, 2.0 * kPi);

    StressODEProblem prob;
    prob.u_path = [amp, omega, phase](double t) {
      double u = 0.0;
      for (int j = 0; j < 4; ++j)
        u += amp[j] * std::cos(omega[j] * t + phase[j]);
      return u;
    };
    prob.varsigma0 = prng.uniform(-100.0, 100.0);
    prob.params = p;

    for (const double t : {0.5, 2.0, t_eventual}) {
      const double val = stress_closed_form(prob, t);
      const double bound = stress_bound_value(t, std::abs(prob.varsigma0), p);
      worst_slack = std::min(worst_slack, bound - std::abs(val));
      if (t == t_eventual)
        worst_eventual = std::max(worst_eventual, std::abs(val));
    }
  }
  const bool eventual_ok = worst_eventual <= tail + 0.01;

  res.ok = slope >= 1.8 && worst_slack >= -1e-8 && eventual_ok;
  res.detail = "frozen-concentration order " + fmt(slope) +
               " (need >= 1.8); bound slack " + fmt(worst_slack) +
               " (need >= -1e-8); eventual max " + fmt(worst_eventual) +
               " vs " + fmt(tail + 0.01);
  return res;
}

CheckResult check_dissipation_estimate(int threads) {
  CheckResult res{"energy dissipation bound and absorbing set", true, ""};
  const RunConfig c = standard_config_1d();
  Setup s = build_setup(c);
  const double tol = 0.05;

  std::vector<TrajectoryRecord> cal(c.dissipation_ensemble);
  parallel_for(c.dissipation_ensemble, threads, [&](int i) {
    const State ic =
        random_state(s.ops, Rng::derive(c.seed, 1000 + i), c.initial_modes,
                     c.initial_decay, c.initial_amplitude);
    cal[i] = integrate(ic, s.solver, s.ops, s.lift, s.params);
  });

  DissipationEstimate est;
  est.gamma_hat = compute_gamma(s.ops, s.params);
  est.Gamma_hat = fit_absorbing_level(cal);

  const int n_held = 10;
  std::vector<TrajectoryRecord> held(n_held);
  parallel_for(n_held, threads, [&](int i) {
    State ic = random_state(s.ops, Rng::derive(c.seed, i), c.initial_modes,
                            c.initial_decay, c.initial_amplitude);
    const double target =
        est.Gamma_hat * std::pow(10.0, 6.0 * (i + 1) / n_held);
    const double current = energy_chi(ic, s.ops, s.params);
    if (target > 0.0 && current > 0.0) {
      const double scale = std::sqrt(target / current);
      ic.v.values() *= scale;
      ic.tau.values() *= scale;
    }
    held[i] = integrate(ic, s.solver, s.ops, s.lift, s.params);
  });

  bool all_ok = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  double latest_entry = 0.0;
  for (const auto& rec : held) {
    const DissipationReport dr = dissipation_check(rec, est, tol);
    all_ok =
        all_ok && dr.bound_ok && dr.absorb_ok && !rec.divergence.has_value();
    worst_margin = std::min(worst_margin, dr.worst_margin);
    latest_entry = std::max(latest_entry, dr.entry_time);
  }
  res.ok = all_ok && est.gamma_hat > 0.0;
  res.detail = "gamma " + fmt(est.gamma_hat) + ", Gamma " +
               fmt(est.Gamma_hat) + ", 10 held-out runs to 1e6 x Gamma, " +
               "worst margin " + fmt(worst_margin) + ", latest entry t " +
               fmt(latest_entry);
  return res;
}

CheckResult check_continuous_dependence(int threads) {
  CheckResult res{"continuous dependence on initial data (Gronwall bound)",
                  true, ""};
  RunConfig c = standard_config_1d();
  c.t_end = 5.0;
  Setup s = build_setup(c);
  const GronwallData gw = gronwall_constant(s.params, s.ops);

  const State base = random_state(s.ops, Rng::derive(c.seed, 7),
                                  c.initial_modes, c.initial_decay,
                                  c.initial_amplitude);
  const TrajectoryRecord rec1 =
      integrate(base, s.solver, s.ops, s.lift, s.params);
  const TrajectoryRecord rec2 =
      integrate(base, s.solver, s.ops, s.lift, s.params);
  const bool bit_ok = records_bitwise_equal(rec1, rec2);

  Rng rng(Rng::derive(c.seed, 8));
  const DiscreteField dv = random_eigen_field(s.ops, rng, 12, 1.0, 1.0);
  const DiscreteField dtau = random_eigen_field(s.ops, rng, 12, 1.0, 1.0);
  const DiscreteField dw(
      s.grid, dtau.values() + s.params.nu * dv.values());
  const double d0 = std::sqrt(norm_l2(dv) * norm_l2(dv) +
                              norm_l2(dw) * norm_l2(dw));

  const std::vector<double> epsilons{1e-3, 1e-6};
  std::vector<double> worst(epsilons.size(),
                            std::numeric_limits<double>::infinity());
  parallel_for(static_cast<int>(epsilons.size()), threads, [&](int e) {
    const double eps = epsilons[e];
    const double sc = eps / d0;
    const State pert(0.0,
                     DiscreteField(s.grid, base.v.values() + sc * dv.values()),
                     DiscreteField(s.grid,
                                   base.tau.values() + sc * dtau.values()));
    const TrajectoryRecord rp =
        integrate(pert, s.solver, s.ops, s.lift, s.params);
    for (std::size_t k = 0; k < rp.states.size(); ++k) {
      const double dist =
          state_distance_vw(rec1.states[k], rp.states[k], s.params.nu);
      if (dist <= 0.0) continue;
      const double margin = std::log(1.1 * eps) + gw.c_hat * rp.times[k] -
                            std::log(dist);
      worst[e] = std::min(worst[e], margin);
    }
  });

  const double worst_margin = std::min(worst[0], worst[1]);
  res.ok = bit_ok && worst_margin >= 0.0;
  res.detail = std::string("identical-input runs bit-identical: ") +
               (bit_ok ? "yes" : "NO") + "; log-margin of the bound " +
               fmt(worst_margin) + " (need >= 0; growth constant " +
               fmt(gw.c_hat) + ")";
  return res;
}

CheckResult check_shift_semigroup() {
  CheckResult res{"shift operator laws and integrate determinism", true, ""};
  RunConfig c = standard_config_1d();
  c.t_end = 20.0;
  Setup s = build_setup(c);
  const State ic = random_state(s.ops, Rng::derive(c.seed, 3),
                                c.initial_modes, c.initial_decay,
                                c.initial_amplitude);
  const TrajectoryRecord rec =
      integrate(ic, s.solver, s.ops, s.lift, s.params);
  const TrajectoryRecord rec_again =
      integrate(ic, s.solver, s.ops, s.lift, s.params);
  const bool determinism = records_bitwise_equal(rec, rec_again);

  const TrajectoryRecord id = shift_trajectory(rec, 0.0);
  const bool identity_ok =
      id.times == rec.times && records_bitwise_equal(id, rec);

  const TrajectoryRecord two_step =
      shift_trajectory(shift_trajectory(rec, 5.0), 10.0);
  const TrajectoryRecord one_step = shift_trajectory(rec, 15.0);
  const bool compose_ok = two_step.times == one_step.times &&
                          records_bitwise_equal(two_step, one_step);

  res.ok = determinism && identity_ok && compose_ok;
  res.detail = std::string("determinism ") + (determinism ? "ok" : "BROKEN") +
               ", zero shift is the identity " + (identity_ok ? "ok" : "NO") +
               ", composed shifts 5+10 equal single 15 " +
               (compose_ok ? "ok" : "NO") + " (all bitwise)";
  return res;
}

CheckResult check_attraction(int threads) {
  CheckResult res{"attraction functional decay over the shift list", true,
                  ""};
  const RunConfig c = standard_config_1d();
  Setup s = build_setup(c);

  std::vector<TrajectoryRecord> ens(c.ensemble_size);
  parallel_for(c.ensemble_size, threads, [&](int i) {
    const State ic =
        random_state(s.ops, Rng::derive(c.seed, 2000 + i), c.initial_modes,
                     c.initial_decay, c.initial_amplitude);
    ens[i] = integrate(ic, s.solver, s.ops, s.lift, s.params);
  });
  bool diverged = false;
  for (const auto& rec : ens) diverged = diverged || rec.divergence.has_value();

  const AttractionReport rep =
      attraction_diagnostic(ens, c.shifts, c.delta, c.horizon, s.ops);
  res.ok = rep.nonincreasing_ok && rep.contraction_ok && !diverged;
  std::string a_list;
  for (std::size_t i = 0; i < rep.attraction.size(); ++i)
    a_list += (i ? ", " : "") + fmt(rep.attraction[i]);
  res.detail = "A(h) = [" + a_list + "] over shifts {0,5,10,20,40}; " +
               "nonincreasing within 5% " +
               (rep.nonincreasing_ok ? "ok" : "NO") +
               ", A(40) <= 0.1 A(0) " + (rep.contraction_ok ? "ok" : "NO");
  return res;
}

CheckResult check_rest_states() {
  CheckResult res{"rest-state exactness (zero preservation and boundary lift)",
                  true, ""};

  // Homogeneous problem: the zero state is preserved to the last bit.
  const GridSpec g1 = GridSpec::line(1.0, 32);
  const DiscreteOperators ops1 = DiscreteOperators::build(g1);
  ModelParams p;  // shipped defaults
  const BoundaryLift lift0 = make_lift(g1, BoundaryPreset::homogeneous(), p);
  bool zero_ok = true;
  for (const Scheme scheme : {Scheme::ImexEuler, Scheme::ImexCN}) {
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.t_end = 2.0;
    cfg.scheme = scheme;
    cfg.sample_stride = 10;
    const TrajectoryRecord rec =
        integrate(State::zero(g1), cfg, ops1, lift0, p);
    for (const State& st : rec.states)
      zero_ok = zero_ok && st.v.max_abs() == 0.0 && st.tau.max_abs() == 0.0;
  }

  // Inhomogeneous boundary: the zero transformed state has zero energy and
  // lifts exactly onto the boundary data pair.
  const GridSpec g2 = GridSpec::line(1.0, 64);
  const DiscreteOperators ops2 = DiscreteOperators::build(g2);
  const BoundaryPreset bump = BoundaryPreset::bump(0.4, {0.5, 0.5}, 0.15);
  const BoundaryLift lift = make_lift(g2, bump, p);
  const State rest = State::zero(g2);
  const double chi = energy_chi(rest, ops2, p);
  auto [u, sigma] = lift_state(rest.v, rest.tau, lift, p);
  const bool lift_ok =
      vec_bitwise_equal(u.values(), lift.phi_interior.values()) &&
      vec_bitwise_equal(sigma.values(), lift.phi_stress_interior.values());

  // A constructed rest trajectory recovers constant-in-time (u, sigma).
  TrajectoryRecord rest_rec;
  rest_rec.sample_dt = 1.0;
  for (int k = 0; k < 3; ++k) {
    rest_rec.times.push_back(k);
    rest_rec.states.push_back(State::zero(g2, k));
    rest_rec.energy.push_back(make_energy_record(rest_rec.states.back(), ops2, p));
  }
  bool recover_ok = true;
  for (const auto& sample : recover_u_sigma(rest_rec, lift, p))
    recover_ok =
        recover_ok &&
        vec_bitwise_equal(sample.u.values(), lift.phi_interior.values()) &&
        vec_bitwise_equal(sample.sigma.values(),
                          lift.phi_stress_interior.values());

  res.ok = zero_ok && chi == 0.0 && lift_ok && recover_ok;
  res.detail = std::string("zero state preserved bitwise: ") +
               (zero_ok ? "yes" : "NO") + "; rest energy " + fmt(chi) +
               "; (u, sigma) equals the boundary pair bitwise: " +
               (lift_ok && recover_ok ? "yes" : "NO");
  return res;
}

CheckResult check_output_determinism() {
  CheckResult res{"byte-identical artifacts across repeated runs", true, ""};
  RunConfig c = standard_config_1d();
  c.t_end = 10.0;

  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  const fs::path base =
      fs::temp_directory_path() / ("polydiff_determinism_" +
                                   std::to_string(stamp));
  std::ostringstream sink;
  const int code_a = run_simulate(c, base / "a", 1, sink);
  const int code_b = run_simulate(c, base / "b", 1, sink);

  const std::vector<std::string> artifacts{
      "resolved_config.json", "energy.csv", "final_state.pdif",
      "final_state.txt", "run_report.txt"};
  bool equal = code_a == 0 && code_b == 0;
  for (const auto& name : artifacts)
    equal = equal && files_byte_equal(base / "a" / name, base / "b" / name);
  std::error_code ec;
  fs::remove_all(base, ec);

  res.ok = equal;
  res.detail = std::to_string(artifacts.size()) +
               " artifacts compared byte-for-byte across two runs: " +
               (equal ? "identical" : "DIFFER");
  return res;
}

}  // namespace polydiff
