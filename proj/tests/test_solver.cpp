#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kgres/solver.hpp"
#include "support/systems.hpp"

using namespace kgres;
using namespace kgres::testing;

namespace {

CubicNonlinearity no_force(int n) { return CubicNonlinearity(n, {}); }

CubicNonlinearity cubic_pair_force(double b1 = 1.0, double b2 = 1.0) {
  return CubicNonlinearity(
      2, {CubicNonlinearity::term(1, b1, {{1, Deriv::None}, {1, Deriv::None}, {2, Deriv::None}}),
          CubicNonlinearity::term(2, b2, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}})});
}

CauchyData bump_data(int n, double epsilon, double B) {
  CauchyData d;
  d.epsilon = epsilon;
  d.support_radius = B;
  d.components.assign(static_cast<size_t>(n), ComponentData{Shape::Bump, 1.0, Shape::Zero, 0.0});
  return d;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid1D(10.0, 100), std::invalid_argument);  // not a power of two
  CHECK_THROWS_AS(Grid1D(-1.0, 64), std::invalid_argument);
  Grid1D g(8.0, 64);
  CHECK(g.dx() == doctest::Approx(0.25));
  CHECK(g.node(0) == doctest::Approx(-8.0));
}

TEST_CASE("spectral derivative") {
  Grid1D g(std::numbers::pi, 128);
  std::vector<double> f(128), expect(128);
  SUBCASE("sine mode") {
    const double xi = 3.0;
    for (int i = 0; i < 128; ++i) {
      f[i] = std::sin(xi * g.node(i));
      expect[i] = xi * std::cos(xi * g.node(i));
    }
    auto d = spatial_derivative(g, f);
    for (int i = 0; i < 128; ++i) CHECK(d[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
  SUBCASE("constant") {
    std::fill(f.begin(), f.end(), 2.5);
    auto d = spatial_derivative(g, f);
    for (double v : d) CHECK(std::abs(v) <= 1e-13);
  }
  SUBCASE("derivative composed twice matches the second derivative") {
    for (int i = 0; i < 128; ++i) {
      const double x = g.node(i);
      f[i] = std::sin(2 * x) + 0.3 * std::cos(5 * x);
      expect[i] = -4 * std::sin(2 * x) - 0.3 * 25 * std::cos(5 * x);
    }
    auto d2 = spatial_derivative(g, spatial_derivative(g, f));
    for (int i = 0; i < 128; ++i) CHECK(d2[i] == doctest::Approx(expect[i]).epsilon(1e-10));
  }
}

TEST_CASE("norm quadrature basics") {
  Grid1D g(4.0, 64);
  FieldState s(0.0, 1, 64);
  // indicator-like plateau of height h over width w
  const double h = 2.0, w = 1.0;
  for (int i = 0; i < 64; ++i)
    if (std::abs(g.node(i)) < w / 2) s.u_row(0)[static_cast<size_t>(i)] = h;
  CHECK(lp_norm(g, s.u_row(0), std::numeric_limits<double>::infinity()) == doctest::Approx(h));
  CHECK(lp_norm(g, s.u_row(0), 2.0) == doctest::Approx(h * std::sqrt(w)).epsilon(0.1));

  FieldState z(0.0, 1, 64);
  auto norms = observe_norms(g, z);
  CHECK(norms[0][0].l2 == 0.0);
  CHECK(norms[0][1].linf == 0.0);
}

TEST_CASE("linear dispersion relation is tracked to high accuracy") {
  // u(0) = cos(xi x), ut(0) = 0 evolves as cos(xi x) cos(t sqrt(xi^2 + m^2))
  const double L = std::numbers::pi;
  Grid1D g(L, 256);
  MassVector m({Rational(1)});
  const double xi = 3.0;
  FieldState init(0.0, 1, 256);
  for (int i = 0; i < 256; ++i) init.u_row(0)[static_cast<size_t>(i)] = std::cos(xi * g.node(i));

  EvolveOptions opt;
  opt.dt = 1e-3;
  opt.t_final = 10.0;
  auto record = evolve(m, no_force(1), std::move(init), g, opt);
  REQUIRE_FALSE(record.blew_up);

  const double omega = std::sqrt(xi * xi + 1.0);
  double err = 0.0;
  for (int i = 0; i < 256; ++i) {
    const double exact = std::cos(xi * g.node(i)) * std::cos(10.0 * omega);
    err = std::max(err, std::abs(record.final_state.u_row(0)[static_cast<size_t>(i)] - exact));
  }
  CHECK(err < 1e-6);
}

TEST_CASE("free field conserves the linear energy") {
  Grid1D g(64.0, 2048);
  MassVector m({Rational(1), Rational(3)});
  auto data = bump_data(2, 0.1, 2.0);

  EvolveOptions opt;
  opt.dt = 0.002;
  opt.t_final = 50.0;

  double e0 = -1.0, drift = 0.0;
  CallbackObserver watch(5.0, [&](const FieldState& s) {
    const double e = linear_energy(g, m, s);
    if (e0 < 0) e0 = e;
    drift = std::max(drift, std::abs(e - e0) / e0);
  });
  StepObserver* obs[] = {&watch};
  auto record = evolve(m, no_force(2), data, g, opt, obs);
  REQUIRE_FALSE(record.blew_up);
  CHECK(drift < 1e-8);
}

TEST_CASE("light cone leakage stays at spectral-tail level") {
  Grid1D g(32.0, 8192);
  MassVector m({Rational(1)});
  const double B = 2.0;
  auto data = bump_data(1, 0.1, B);

  EvolveOptions opt;
  opt.dt = 0.0;  // default
  opt.t_final = 20.0;

  double worst_rel = 0.0;
  CallbackObserver watch(2.0, [&](const FieldState& s) {
    auto leak = light_cone_leakage(g, s, B);
    REQUIRE(leak.has_value());
    const double sup = lp_norm(g, s.u_row(0), std::numeric_limits<double>::infinity());
    if (sup > 0) worst_rel = std::max(worst_rel, *leak / sup);
  });
  StepObserver* obs[] = {&watch};
  auto record = evolve(m, no_force(1), data, g, opt, obs);
  REQUIRE_FALSE(record.blew_up);
  CHECK(worst_rel < 1e-10);

  // t = 0: sampled data is identically zero outside the support
  auto leak0 = light_cone_leakage(g, data.sample(g), B);
  REQUIRE(leak0.has_value());
  CHECK(*leak0 == 0.0);

  // horizon exhausted
  FieldState late(40.0, 1, 8192);
  CHECK_FALSE(light_cone_leakage(g, late, 1.0).has_value());
}

TEST_CASE("measured RK4 order on the cubic pair") {
  Grid1D g(20.0, 256);
  MassVector m = mass13();
  auto F = cubic_pair_force();
  CauchyData data = bump_data(2, 0.5, 1.0);

  auto run_with = [&](double dt) {
    EvolveOptions opt;
    opt.dt = dt;
    opt.t_final = 2.0;
    return evolve(m, F, data, g, opt).final_state;
  };
  auto sup_diff = [](const FieldState& a, const FieldState& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.u.size(); ++i) d = std::max(d, std::abs(a.u[i] - b.u[i]));
    return d;
  };
  auto s1 = run_with(0.02);
  auto s2 = run_with(0.01);
  auto s3 = run_with(0.005);
  const double e1 = sup_diff(s1, s2), e2 = sup_diff(s2, s3);
  const double order = std::log2(e1 / e2);
  CHECK(order >= 3.8);
}

TEST_CASE("early-time amplitude scales linearly in epsilon") {
  Grid1D g(8.0, 512);
  MassVector m = mass13();
  auto F = cubic_pair_force();
  const double eps = 0.05;

  EvolveOptions opt;
  opt.dt = 0.005;
  opt.t_final = 1.0;
  auto a = evolve(m, F, bump_data(2, eps, 1.0), g, opt).final_state;
  auto b = evolve(m, F, bump_data(2, eps / 2, 1.0), g, opt).final_state;
  double diff = 0.0, sup = 0.0;
  for (size_t i = 0; i < a.u.size(); ++i) {
    diff = std::max(diff, std::abs(a.u[i] - 2.0 * b.u[i]));
    sup = std::max(sup, std::abs(a.u[i]));
  }
  CHECK(diff <= 10.0 * eps * eps * sup);
}

TEST_CASE("blow-up guard flags runaway states") {
  Grid1D g(8.0, 256);
  MassVector m({Rational(1)});
  // strongly self-forcing term with large data drives the ceiling quickly
  CubicNonlinearity F(1, {CubicNonlinearity::term(
                             1, 80.0, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}})});
  CauchyData data = bump_data(1, 1.0, 1.0);
  EvolveOptions opt;
  opt.t_final = 6.0;
  opt.blowup_factor = 10.0;
  auto record = evolve(m, F, data, g, opt);
  CHECK(record.blew_up);
  CHECK(record.blowup_time > 0.0);
  CHECK(record.blowup_time <= 6.0);
}

TEST_CASE("non-resonant derivative coupling runs globally with bounded sqrt(t) sup") {
  // the equal-mass pairing is the breakdown candidate; detuned masses
  // (m2 != m1, m2 != 3 m1) stay small and disperse
  Grid1D g(36.0, 1024);
  MassVector m({Rational(1), Rational(2)});
  CubicNonlinearity F(2, {CubicNonlinearity::term(1, 1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {2, Deriv::Dx}}),
                          CubicNonlinearity::term(2, 1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {1, Deriv::Dx}})});
  CauchyData data = bump_data(2, 0.3, 1.0);
  EvolveOptions opt;
  opt.t_final = 30.0;

  double early = 0.0, late = 0.0;
  CallbackObserver watch(1.0, [&](const FieldState& s) {
    double sup = 0.0;
    for (int j = 0; j < 2; ++j)
      sup = std::max(sup, lp_norm(g, s.u_row(j), std::numeric_limits<double>::infinity()));
    const double scaled = std::sqrt(std::max(s.t, 1.0)) * sup;
    if (s.t >= 4.0 && s.t <= 6.0) early = std::max(early, scaled);
    if (s.t >= 25.0) late = std::max(late, scaled);
  });
  StepObserver* obs[] = {&watch};
  auto record = evolve(m, F, data, g, opt, obs);
  REQUIRE_FALSE(record.blew_up);
  CHECK(late <= 1.5 * early);
}

TEST_CASE("CFL and light-cone validation") {
  Grid1D g(4.0, 64);
  MassVector m({Rational(1)});
  EvolveOptions opt;
  opt.dt = 1.0;  // far above the limit
  opt.t_final = 2.0;
  FieldState init(0.0, 1, 64);
  CHECK_THROWS_WITH_AS(evolve(m, no_force(1), std::move(init), g, opt),
                       doctest::Contains("CFL"), std::invalid_argument);

  EvolveOptions opt2;
  opt2.t_final = 10.0;  // box too small: L < B + T + margin
  CHECK_THROWS_WITH_AS(evolve(m, no_force(1), bump_data(1, 0.1, 1.0), g, opt2),
                       doctest::Contains("light cone"), std::invalid_argument);
}

TEST_CASE("field probes interpolate a known travelling mode") {
  const double L = std::numbers::pi;
  Grid1D g(L, 256);
  MassVector m({Rational(2)});
  const double xi = 4.0;
  const double omega = std::sqrt(xi * xi + 4.0);
  FieldState init(0.0, 1, 256);
  for (int i = 0; i < 256; ++i) init.u_row(0)[static_cast<size_t>(i)] = std::cos(xi * g.node(i));

  std::vector<FieldProbeRequest> reqs;
  for (double t : {0.63, 1.004, 1.5178, 2.11, 2.74})
    for (double x : {-1.91, -0.44, 0.0, 0.851, 2.7}) reqs.push_back({t, x});

  FieldProbeObserver probe(g, 1, std::move(reqs));
  StepObserver* obs[] = {&probe};
  EvolveOptions opt;
  opt.dt = 0.002;
  opt.t_final = 3.0;
  auto record = evolve(m, no_force(1), std::move(init), g, opt, obs);
  REQUIRE_FALSE(record.blew_up);
  REQUIRE(probe.complete());

  for (const auto& s : probe.samples()) {
    const double exact_u = std::cos(xi * s.x) * std::cos(omega * s.t);
    const double exact_ut = -omega * std::cos(xi * s.x) * std::sin(omega * s.t);
    const double exact_ux = -xi * std::sin(xi * s.x) * std::cos(omega * s.t);
    CHECK(s.u[0] == doctest::Approx(exact_u).epsilon(5e-8));
    CHECK(s.ut[0] == doctest::Approx(exact_ut).epsilon(5e-8));
    CHECK(s.ux[0] == doctest::Approx(exact_ux).epsilon(5e-8));
  }
}
