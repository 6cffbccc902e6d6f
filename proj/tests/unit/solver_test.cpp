#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "polydiff/random_fields.hpp"
#include "polydiff/solver.hpp"

using namespace polydiff;

namespace {

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(),
                      sizeof(double) * static_cast<size_t>(a.size())) == 0);
}

struct Fixture {
  GridSpec grid;
  ModelParams params;
  DiscreteOperators ops;
  BoundaryLift lift;

  explicit Fixture(const GridSpec& g,
                   const BoundaryPreset& preset = BoundaryPreset::homogeneous())
      : grid(g),
        params(),
        ops(DiscreteOperators::build(g)),
        lift(make_lift(g, preset, params)) {}
};

}  // namespace

TEST_CASE("scheme names round-trip and unknown names are rejected") {
  CHECK(scheme_from_name("imex-euler") == Scheme::ImexEuler);
  CHECK(scheme_from_name("imex-cn") == Scheme::ImexCN);
  CHECK(scheme_name(Scheme::ImexEuler) == "imex-euler");
  CHECK(scheme_name(Scheme::ImexCN) == "imex-cn");
  CHECK_THROWS_AS(scheme_from_name("rk4"), Error);
}

TEST_CASE("default step size rule and config validation") {
  auto g = GridSpec::line(1.0, 99);  // h = 0.01
  ModelParams p;
  CHECK(SolverConfig::default_dt(g, p) == doctest::Approx(0.01));
  p.beta_R = 100.0;  // 0.25/beta_R = 0.0025 binds
  CHECK(SolverConfig::default_dt(g, p) == doctest::Approx(0.0025));

  SolverConfig bad;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.dt = 0.1;
  bad.t_end = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.t_end = 1.0;
  bad.sample_stride = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("zero state is preserved exactly under both schemes") {
  Fixture fx(GridSpec::line(1.0, 21));
  for (auto scheme : {Scheme::ImexEuler, Scheme::ImexCN}) {
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.t_end = 2.0;
    cfg.scheme = scheme;
    cfg.sample_stride = 25;
    auto rec =
        integrate(State::zero(fx.grid), cfg, fx.ops, fx.lift, fx.params);
    REQUIRE(!rec.divergence.has_value());
    for (const auto& s : rec.states) {
      CHECK(s.v.max_abs() == 0.0);
      CHECK(s.tau.max_abs() == 0.0);
    }
  }
}

TEST_CASE("frozen-stress eigenmode decays by the scheme amplification factor") {
  Fixture fx(GridSpec::line(1.0, 15));
  const int k = 2;
  const double lam = fx.ops.eigenvalues()[k];
  const double d = fx.params.d();
  const double dt = 0.05;
  const int steps = 12;

  for (auto scheme : {Scheme::ImexEuler, Scheme::ImexCN}) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.scheme = scheme;
    cfg.freeze_tau = true;
    ImexStepper stepper(fx.ops, fx.lift, fx.params, cfg);
    State s(0.0, fx.ops.eigenfield(k), DiscreteField::zero(fx.grid));
    const double x = dt * d * lam;
    const double factor = scheme == Scheme::ImexEuler
                              ? 1.0 / (1.0 + x)
                              : (1.0 - 0.5 * x) / (1.0 + 0.5 * x);
    double expected = 1.0;
    for (int n = 0; n < steps; ++n) {
      s = stepper.step(s, n);
      expected *= factor;
      const auto c = fx.ops.spectral_coefficients(s.v);
      CHECK(c[k] == doctest::Approx(expected).epsilon(1e-12));
      CHECK(s.tau.max_abs() == 0.0);
    }
  }
}

TEST_CASE("frozen-stress affine flow matches the dense matrix exponential") {
  // With tau frozen the concentration stage integrates v' = A v + b,
  // A = d lap, b = E lap tau0 + h. Compare against expm at small dt.
  Fixture fx(GridSpec::line(1.0, 24), BoundaryPreset::ramp_x(0.0, 0.6));
  Rng rng(301);
  auto v0 = random_eigen_field(fx.ops, rng, 8, 0.5, 0.5);
  auto tau0 = random_eigen_field(fx.ops, rng, 8, 0.5, 0.5);
  const double T = 0.4;

  const Eigen::MatrixXd A =
      fx.params.d() * Eigen::MatrixXd(fx.ops.laplacian());
  const Eigen::VectorXd b =
      fx.params.E * fx.ops.apply_laplacian(tau0).values() +
      fx.lift.h_field.values();
  const Eigen::VectorXd v_star = -A.fullPivLu().solve(b);
  const Eigen::MatrixXd expA = (T * A).exp();
  const Eigen::VectorXd exact = expA * (v0.values() - v_star) + v_star;

  SolverConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_end = T;
  cfg.scheme = Scheme::ImexCN;
  cfg.freeze_tau = true;
  cfg.sample_stride = 4000;
  auto rec = integrate(State(0.0, v0, tau0), cfg, fx.ops, fx.lift, fx.params);
  REQUIRE(!rec.divergence.has_value());
  const auto& vT = rec.states.back().v.values();
  for (int i = 0; i < vT.size(); ++i)
    CHECK(vT[i] == doctest::Approx(exact[i]).epsilon(5e-7));
}

TEST_CASE("frozen concentration leaves v bitwise fixed while tau moves") {
  Fixture fx(GridSpec::line(1.0, 16), BoundaryPreset::constant(0.4));
  Rng rng(88);
  auto v0 = random_eigen_field(fx.ops, rng, 6, 0.5, 0.4);
  auto tau0 = random_eigen_field(fx.ops, rng, 6, 0.5, 0.4);
  SolverConfig cfg;
  cfg.dt = 0.02;
  cfg.t_end = 1.0;
  cfg.freeze_v = true;
  cfg.sample_stride = 10;
  auto rec = integrate(State(0.0, v0, tau0), cfg, fx.ops, fx.lift, fx.params);
  REQUIRE(!rec.divergence.has_value());
  double moved = 0.0;
  for (const auto& s : rec.states) {
    CHECK(same_bits(s.v.values(), v0.values()));
    moved = std::max(moved, (s.tau.values() - tau0.values()).cwiseAbs().maxCoeff());
  }
  CHECK(moved > 1e-3);
}

TEST_CASE("diffusive stage is unconditionally stable in L2") {
  Fixture fx(GridSpec::line(1.0, 40));
  Rng rng(19);
  for (auto scheme : {Scheme::ImexEuler, Scheme::ImexCN}) {
    for (double dt : {0.1, 1.0, 25.0}) {
      SolverConfig cfg;
      cfg.dt = dt;
      cfg.scheme = scheme;
      cfg.freeze_tau = true;
      ImexStepper stepper(fx.ops, fx.lift, fx.params, cfg);
      State s(0.0, random_eigen_field(fx.ops, rng, 15, 0.2, 1.0),
              DiscreteField::zero(fx.grid));
      double prev = norm_l2(s.v);
      for (int n = 0; n < 6; ++n) {
        s = stepper.step(s, n);
        const double cur = norm_l2(s.v);
        CHECK(cur <= prev * (1.0 + 1e-13));
        prev = cur;
      }
    }
  }
}

TEST_CASE("integration is deterministic bit for bit") {
  Fixture fx(GridSpec::line(1.0, 32), BoundaryPreset::bump(0.4, {0.5, 0.5}, 0.15));
  auto s0 = random_state(fx.ops, 2024, 10, 0.8, 0.5);
  SolverConfig cfg;
  cfg.dt = 0.005;
  cfg.t_end = 3.0;
  cfg.sample_stride = 40;
  auto r1 = integrate(s0, cfg, fx.ops, fx.lift, fx.params);
  auto r2 = integrate(s0, cfg, fx.ops, fx.lift, fx.params);
  REQUIRE(r1.size() == r2.size());
  for (size_t i = 0; i < r1.size(); ++i) {
    CHECK(same_bits(r1.states[i].v.values(), r2.states[i].v.values()));
    CHECK(same_bits(r1.states[i].tau.values(), r2.states[i].tau.values()));
  }
}

TEST_CASE("divergence guard reports the blow-up and keeps the partial record") {
  Fixture fx(GridSpec::line(1.0, 12));
  SolverConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 5.0;
  cfg.sample_stride = 10;
  cfg.max_value_guard = 50.0;
  // Constant huge forcing on v blows past the guard quickly (the diffusive
  // equilibrium of a constant forcing f is ~ f L^2 / (8 d), far above 50).
  Forcing forcing;
  forcing.f_v = [&](double) {
    return Eigen::VectorXd::Constant(fx.grid.total_nodes(), 1e5);
  };
  auto rec = integrate(State::zero(fx.grid), cfg, fx.ops, fx.lift, fx.params,
                       &forcing);
  REQUIRE(rec.divergence.has_value());
  CHECK(rec.divergence->step_index >= 0);
  CHECK(!rec.states.empty());
  CHECK(rec.states.back().v.max_abs() <= cfg.max_value_guard);

  ImexStepper stepper(fx.ops, fx.lift, fx.params, cfg);
  State s(0.0, DiscreteField::zero(fx.grid), DiscreteField::zero(fx.grid));
  CHECK_THROWS_AS(stepper.step(s, 0, &forcing), DivergenceError);
}

TEST_CASE("sorption transient fills the domain toward the boundary level") {
  // Boundary held at u = 0.5, interior initially empty (u = sigma = 0).
  const double level = 0.5;
  Fixture fx(GridSpec::line(1.0, 31), BoundaryPreset::constant(level));
  auto [v0, tau0] = drop_state(DiscreteField::zero(fx.grid),
                               DiscreteField::zero(fx.grid), fx.lift,
                               fx.params);
  SolverConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 40.0;
  cfg.sample_stride = 100;
  auto rec =
      integrate(State(0.0, v0, tau0), cfg, fx.ops, fx.lift, fx.params);
  REQUIRE(!rec.divergence.has_value());
  auto phys = recover_u_sigma(rec, fx.lift, fx.params);
  // Total uptake (mean concentration) grows monotonically...
  double prev_mean = -1.0;
  for (const auto& ps : phys) {
    const double mean = ps.u.values().mean();
    CHECK(mean >= prev_mean - 1e-10);
    prev_mean = mean;
  }
  // ...and the final state sits at the saturated rest state.
  const auto& uT = phys.back().u;
  for (int i = 0; i < uT.size(); ++i)
    CHECK(uT.values()[i] == doctest::Approx(level).epsilon(2e-4));
  // Cross-check the end state against a step-halved reference run.
  SolverConfig fine = cfg;
  fine.dt = cfg.dt / 16.0;
  fine.sample_stride = 1600;
  auto ref =
      integrate(State(0.0, v0, tau0), fine, fx.ops, fx.lift, fx.params);
  const auto& a = rec.states.back().v.values();
  const auto& b = ref.states.back().v.values();
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("growth constant combines the stress lipschitz bounds") {
  auto g = GridSpec::line(1.0, 48);
  auto ops = DiscreteOperators::build(g);
  ModelParams p;
  auto gd = gronwall_constant(p, ops);
  const double denom = 2.0 * std::min(0.5 * p.nu * p.D, 0.5 * p.E);
  const double expected =
      p.E * (0.5 * gd.lip.L_u + gd.lip.L_sigma) / denom;
  CHECK(gd.c_hat == doctest::Approx(expected).epsilon(1e-12));
  CHECK(gd.prefactor >= 1.0);
}

TEST_CASE("record sampling clock is exact multiples of the sample step") {
  Fixture fx(GridSpec::line(1.0, 10));
  SolverConfig cfg;
  cfg.dt = 0.005;
  cfg.t_end = 1.0;
  cfg.sample_stride = 20;  // sample_dt = 0.1
  auto rec = integrate(State::zero(fx.grid), cfg, fx.ops, fx.lift, fx.params);
  REQUIRE(rec.sample_dt == doctest::Approx(0.1));
  REQUIRE(rec.size() == 11);
  for (size_t k = 0; k < rec.size(); ++k) {
    CHECK(rec.times[k] == static_cast<double>(k) * rec.sample_dt);
    CHECK(rec.states[k].t == rec.times[k]);
    CHECK(rec.energy[k].t == rec.times[k]);
  }
}
