#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kgres/analysis.hpp"

using namespace kgres;

namespace {

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> t(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    t[static_cast<size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return t;
}

}  // namespace

TEST_CASE("pure power law is fit exactly") {
  auto t = log_spaced(10.0, 1e4, 200);
  std::vector<double> y(t.size());
  for (size_t i = 0; i < t.size(); ++i) y[i] = 3.0 * std::pow(t[i], -0.5);
  auto fit = fit_decay(t, y, {10.0, 1e4});
  CHECK(fit.a == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(fit.gamma) <= 1e-10);
  CHECK(fit.residual_rms <= 1e-10);
}

TEST_CASE("power law with a logarithmic correction") {
  auto t = log_spaced(1e2, 1e6, 400);
  std::vector<double> y(t.size());
  for (size_t i = 0; i < t.size(); ++i)
    y[i] = std::pow(t[i], -0.5) * std::pow(std::log(t[i]), -0.5);
  auto fit = fit_decay(t, y, {1e2, 1e6});
  CHECK(fit.a == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(fit.gamma == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("fixing the power-law exponent isolates the log exponent") {
  auto t = log_spaced(1e2, 1e5, 300);
  std::vector<double> y(t.size());
  for (size_t i = 0; i < t.size(); ++i)
    y[i] = std::pow(t[i], -0.5) * std::pow(std::log(t[i]), -0.5);
  DecayFitOptions opt;
  opt.fix_a = true;
  opt.a_value = 0.5;
  auto fit = fit_decay(t, y, {1e2, 1e5}, opt);
  CHECK(fit.a_fixed);
  CHECK(fit.a == 0.5);
  CHECK(fit.gamma == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fit.residual_rms <= 1e-10);
}

TEST_CASE("gamma is pinned on narrow windows") {
  auto t = log_spaced(50.0, 400.0, 100);  // below one decade
  std::vector<double> y(t.size());
  for (size_t i = 0; i < t.size(); ++i) y[i] = std::pow(t[i], -0.4);
  auto fit = fit_decay(t, y, {50.0, 400.0});
  CHECK(fit.gamma_fixed);
  CHECK(fit.gamma == 0.0);
  CHECK(fit.a == doctest::Approx(0.4).epsilon(1e-10));
}

TEST_CASE("fit input validation") {
  auto t = log_spaced(10.0, 100.0, 30);
  std::vector<double> y(t.size(), 1.0);
  CHECK_THROWS_WITH_AS(fit_decay(t, y, {5.0, 100.0}), doctest::Contains("t >= 10"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(fit_decay(t, y, {10.0, 12.0}), doctest::Contains("samples"),
                       std::invalid_argument);
}

TEST_CASE("fit is invariant under positive scaling of the series") {
  auto t = log_spaced(10.0, 1e4, 150);
  std::vector<double> y(t.size()), cy(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    y[i] = std::pow(t[i], -0.37);
    cy[i] = 7.3 * y[i];
  }
  auto fa = fit_decay(t, y, {10.0, 1e4});
  auto fb = fit_decay(t, cy, {10.0, 1e4});
  CHECK(fa.a == doctest::Approx(fb.a).epsilon(1e-12));
  CHECK(fa.gamma == doctest::Approx(fb.gamma).epsilon(1e-10));
}

TEST_CASE("window-shift stability under multiplicative noise") {
  auto t = log_spaced(10.0, 1e4, 600);
  std::vector<double> y(t.size());
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  for (size_t i = 0; i < t.size(); ++i) y[i] = std::pow(t[i], -0.5) * (1.0 + noise(rng));
  auto full = fit_decay(t, y, {10.0, 1e4});
  auto half = fit_decay(t, y, {100.0, 1e4});
  CHECK(std::abs(full.a - half.a) < 0.05);
  CHECK(full.a == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("growth correlation separates log growth from flat") {
  auto t = log_spaced(50.0, 400.0, 120);
  std::vector<double> grows(t.size()), flat(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    grows[i] = std::pow(t[i], -0.5) * std::log(t[i]);
    flat[i] = std::pow(t[i], -0.5);
  }
  auto g = growth_correlation(t, grows, {50.0, 400.0});
  CHECK(g.slope == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g.r_squared == doctest::Approx(1.0).epsilon(1e-9));
  auto f = growth_correlation(t, flat, {50.0, 400.0});
  CHECK(std::abs(f.slope) <= 1e-10);
}

TEST_CASE("Lp interpolation check on a synthetic family") {
  auto t = log_spaced(10.0, 1e4, 200);
  std::vector<double> y2(t.size()), y4(t.size()), yi(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    y2[i] = 1.0;                          // exponent 1/2 - 1/2 = 0
    y4[i] = std::pow(t[i], -0.25);        // 1/2 - 1/4
    yi[i] = std::pow(t[i], -0.5);         // 1/2 - 0
  }
  auto report = lp_interpolation_check(t, y2, y4, yi, {10.0, 1e4});
  CHECK(report.pass);
  CHECK(report.a2 == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(report.a4 == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(report.a_inf == doctest::Approx(0.5).epsilon(1e-10));
}
