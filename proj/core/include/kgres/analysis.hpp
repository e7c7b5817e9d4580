#pragma once

#include <span>
#include <vector>

namespace kgres {

struct FitWindow {
  double t_min = 0.0;
  double t_max = 0.0;
};

struct DecayFitOptions {
  bool fix_gamma = false;   // force gamma to gamma_value
  double gamma_value = 0.0;
  bool fix_a = false;       // force the power-law exponent to a_value
  double a_value = 0.0;
  int min_samples = 20;
};

// Least squares for log y = c - a log t - gamma log log t on a window.
// gamma is identifiable only on wide windows; below a decade of range it is
// pinned to zero automatically.
struct DecayFit {
  FitWindow window;
  double c = 0.0;
  double a = 0.0;      // power-law exponent
  double gamma = 0.0;  // log-power exponent
  bool gamma_fixed = false;
  bool a_fixed = false;
  double residual_rms = 0.0;
  int samples = 0;
};

DecayFit fit_decay(std::span<const double> t, std::span<const double> y, const FitWindow& window,
                   const DecayFitOptions& options = {});

// Regression of t^{1/2} y(t) against log t: positive slope with high R^2 is
// the signature of the t^{-1/2} log t lower bound.
struct GrowthCorrelation {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int samples = 0;
};
GrowthCorrelation growth_correlation(std::span<const double> t, std::span<const double> y,
                                     const FitWindow& window);

// Fits a(p) for p in {2, 4, inf} and checks a(inf) - a(2) ~ 1/2 with a(4)
// in between, within the stated tolerance.
struct LpInterpolationReport {
  double a2 = 0.0, a4 = 0.0, a_inf = 0.0;
  double tolerance = 0.15;
  bool pass = false;
};
LpInterpolationReport lp_interpolation_check(std::span<const double> t,
                                             std::span<const double> y2,
                                             std::span<const double> y4,
                                             std::span<const double> y_inf,
                                             const FitWindow& window, double tolerance = 0.15);

}  // namespace kgres
