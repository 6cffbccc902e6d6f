#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "polydiff/grid.hpp"
#include "polydiff/random_fields.hpp"

using namespace polydiff;

namespace {
constexpr double kPi = std::numbers::pi;

DiscreteField sampled_sine(const GridSpec& g, int k) {
  return DiscreteField::from_function(g, [&](double x, double) {
    return std::sin(k * kPi * x / g.length[0]);
  });
}
}  // namespace

TEST_CASE("laplacian of the constant field sees the homogeneous boundary") {
  auto g = GridSpec::line(1.0, 3);
  auto ops = DiscreteOperators::build(g);
  DiscreteField one(g, Eigen::VectorXd::Ones(3));
  auto lap = ops.apply_laplacian(one);
  // h = 1/4; the end nodes lose one neighbour to the zero boundary.
  CHECK(lap.values()[0] == doctest::Approx(-16.0).epsilon(1e-14));
  CHECK(lap.values()[1] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(lap.values()[2] == doctest::Approx(-16.0).epsilon(1e-14));
}

TEST_CASE("closed-field laplacian is exact on quadratics") {
  auto g = GridSpec::line(1.0, 17);
  auto cf = ClosedField::from_function(
      g, [](double x, double) { return x * (1.0 - x); });
  auto lap = cf.laplacian_interior();
  for (int i = 0; i < lap.size(); ++i)
    CHECK(lap.values()[i] == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("1d eigenvalues match the closed form (4/h^2) sin^2(k pi h / 2)") {
  const int n = 63;
  auto g = GridSpec::line(1.0, n);
  auto ops = DiscreteOperators::build(g);
  const double h = g.spacing(0);
  for (int k = 1; k <= n; ++k) {
    const double s = std::sin(0.5 * k * kPi * h);
    const double expected = 4.0 / (h * h) * s * s;
    CHECK(ops.eigenvalues()[k - 1] ==
          doctest::Approx(expected).epsilon(1e-10));
  }
  CHECK(ops.lambda1() == doctest::Approx(ops.eigenvalues()[0]));
  CHECK(ops.friedrichs_constant() ==
        doctest::Approx(1.0 / std::sqrt(ops.lambda1())));
}

TEST_CASE("2d eigenvalues are sums of the per-axis 1d eigenvalues") {
  auto g = GridSpec::rectangle(1.0, 1.0, 5, 5);
  auto ops = DiscreteOperators::build(g);
  const double h = g.spacing(0);
  auto lam1d = [&](int k) {
    const double s = std::sin(0.5 * k * kPi * h);
    return 4.0 / (h * h) * s * s;
  };
  std::vector<double> expected;
  for (int kx = 1; kx <= 5; ++kx)
    for (int ky = 1; ky <= 5; ++ky) expected.push_back(lam1d(kx) + lam1d(ky));
  std::sort(expected.begin(), expected.end());
  REQUIRE(ops.eigenvalues().size() == static_cast<int>(expected.size()));
  for (int i = 0; i < ops.eigenvalues().size(); ++i)
    CHECK(ops.eigenvalues()[i] ==
          doctest::Approx(expected[static_cast<size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("sampled sine has exact L2 norm and is a discrete eigenfield") {
  const int n = 127;
  auto g = GridSpec::line(1.0, n);
  auto ops = DiscreteOperators::build(g);
  auto f = sampled_sine(g, 1);
  // Trapezoid-free identity: sum_i sin^2(i pi h) * h == 1/2 exactly.
  CHECK(norm_l2(f) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-13));
  // It is the first eigenvector, so the H1 norm is sqrt(lambda_1) times that.
  CHECK(norm_h1(f, ops) ==
        doctest::Approx(std::sqrt(ops.lambda1()) / std::sqrt(2.0))
            .epsilon(1e-12));
  // And the H^{-1} norm is lambda_1^{-1/2} times it; close to 1/(pi sqrt 2).
  CHECK(norm_hm1(f, ops) ==
        doctest::Approx(1.0 / std::sqrt(ops.lambda1() * 2.0)).epsilon(1e-12));
  CHECK(norm_hm1(f, ops) ==
        doctest::Approx(1.0 / (kPi * std::sqrt(2.0))).epsilon(2e-4));
}

TEST_CASE("duality pairing (u, lap v)_{-1} = -(u, v)") {
  for (int dim = 1; dim <= 2; ++dim) {
    auto g = dim == 1 ? GridSpec::line(1.0, 40)
                      : GridSpec::rectangle(1.0, 1.3, 9, 11);
    auto ops = DiscreteOperators::build(g);
    Rng rng(Rng::derive(11, static_cast<uint64_t>(dim)));
    for (int trial = 0; trial < 25; ++trial) {
      auto u = random_eigen_field(ops, rng, 6, 0.7, 1.0);
      auto v = random_eigen_field(ops, rng, 6, 0.7, 1.0);
      const double lhs = inner_hm1(u, ops.apply_laplacian(v), ops);
      const double rhs = -inner_l2(u, v);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("poisson solve inverts the laplacian") {
  auto g = GridSpec::rectangle(2.0, 1.0, 12, 7);
  auto ops = DiscreteOperators::build(g);
  Rng rng(5);
  auto b = random_eigen_field(ops, rng, 10, 0.5, 1.0);
  auto x = ops.solve_laplacian(b);
  auto back = ops.apply_laplacian(x);
  for (int i = 0; i < b.size(); ++i)
    CHECK(back.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-10));
}

TEST_CASE("friedrichs constant is sharp and never undershoots") {
  auto g = GridSpec::line(1.0, 50);
  auto ops = DiscreteOperators::build(g);
  const double K = ops.friedrichs_constant();
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    auto u = random_eigen_field(ops, rng, 12, 0.3, 1.0);
    CHECK(norm_l2(u) <= K * norm_h1(u, ops) * (1.0 + 1e-12));
  }
  // Equality on the ground eigenfield.
  auto e1 = ops.eigenfield(0);
  CHECK(norm_l2(e1) == doctest::Approx(K * norm_h1(e1, ops)).epsilon(1e-12));
}

TEST_CASE("spectral expansion is an L2 isometry") {
  auto g = GridSpec::rectangle(1.0, 1.0, 8, 8);
  auto ops = DiscreteOperators::build(g);
  Rng rng(13);
  auto f = random_eigen_field(ops, rng, 20, 0.4, 1.0);
  auto c = ops.spectral_coefficients(f);
  CHECK(c.norm() == doctest::Approx(norm_l2(f)).epsilon(1e-12));
  // Reconstruct from the coefficients.
  DiscreteField rec = DiscreteField::zero(g);
  for (int k = 0; k < c.size(); ++k)
    rec.values() += c[k] * ops.eigenfield(k).values();
  for (int i = 0; i < f.size(); ++i)
    CHECK(rec.values()[i] == doctest::Approx(f.values()[i]).epsilon(1e-10));
}

TEST_CASE("order -delta norm interpolates and matches H^{-1} at delta=1") {
  auto g = GridSpec::line(1.0, 30);
  auto ops = DiscreteOperators::build(g);
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = random_eigen_field(ops, rng, 8, 0.6, 1.0);
    CHECK(norm_hmdelta(f, ops, 1.0) ==
          doctest::Approx(norm_hm1(f, ops)).epsilon(1e-10));
    // Weaker norms are smaller: ||f||_{-1} <= ||f||_{-1/2} <= ||f||_{L2}
    // (lambda_k >= lambda_1 > 1 on this grid).
    REQUIRE(ops.lambda1() > 1.0);
    CHECK(norm_hm1(f, ops) <= norm_hmdelta(f, ops, 0.5) * (1.0 + 1e-12));
    CHECK(norm_hmdelta(f, ops, 0.5) <= norm_l2(f) * (1.0 + 1e-12));
  }
}

TEST_CASE("frechet pre-norm: frozen value, constant tail, monotonicity guard") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  auto p = frechet_prenorm(a);
  // 1/2*(1/2) + 1/4*(2/3) + 1/8*(3/4) = 49/96
  CHECK(p.value == doctest::Approx(49.0 / 96.0).epsilon(1e-15));
  CHECK(p.tail_bound == doctest::Approx(0.125).epsilon(1e-15));

  const std::vector<double> c(12, 4.0);
  auto pc = frechet_prenorm(c);
  CHECK(pc.value ==
        doctest::Approx(0.8 * (1.0 - std::pow(2.0, -12.0))).epsilon(1e-14));

  const std::vector<double> bad{2.0, 1.0};
  CHECK_THROWS_AS(frechet_prenorm(bad), Error);
  const std::vector<double> neg{-1.0, 0.0};
  CHECK_THROWS_AS(frechet_prenorm(neg), Error);
  CHECK(frechet_prenorm({}).value == 0.0);
}

TEST_CASE("grid and field construction reject malformed input") {
  CHECK_THROWS_AS(GridSpec::line(1.0, 0), Error);
  CHECK_THROWS_AS(GridSpec::line(-1.0, 8), Error);
  CHECK_THROWS_AS(GridSpec::rectangle(1.0, 1.0, 4, 0), Error);
  auto g = GridSpec::line(1.0, 4);
  CHECK_THROWS_AS(DiscreteField(g, Eigen::VectorXd::Zero(5)), Error);
  auto g2 = GridSpec::line(1.0, 5);
  DiscreteField f(g, Eigen::VectorXd::Zero(4));
  DiscreteField f2(g2, Eigen::VectorXd::Zero(5));
  CHECK_THROWS_AS(inner_l2(f, f2), Error);
}

TEST_CASE("norms of the zero field are unsigned zeros") {
  auto g = GridSpec::line(1.0, 16);
  auto ops = DiscreteOperators::build(g);
  auto z = DiscreteField::zero(g);
  // sqrt(-(0,-0)) must not leak a negative zero into text output.
  CHECK(!std::signbit(norm_h1(z, ops)));
  CHECK(!std::signbit(norm_hm1(z, ops)));
  CHECK(!std::signbit(norm_l2(z)));
}

TEST_CASE("node coordinates follow the (i+1)h convention") {
  auto g = GridSpec::rectangle(2.0, 3.0, 3, 2);
  CHECK(g.spacing(0) == doctest::Approx(0.5));
  CHECK(g.spacing(1) == doctest::Approx(1.0));
  CHECK(g.coord(0, 0) == doctest::Approx(0.5));
  CHECK(g.coord(0, 2) == doctest::Approx(1.5));
  CHECK(g.coord(1, 1) == doctest::Approx(2.0));
  CHECK(g.node_index(2, 1) == 5);
  CHECK(g.cell_volume() == doctest::Approx(0.5));
}
