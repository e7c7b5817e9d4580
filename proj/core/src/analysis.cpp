#include "kgres/analysis.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace kgres {

namespace {

void gather_window(std::span<const double> t, std::span<const double> y, const FitWindow& w,
                   std::vector<double>& ts, std::vector<double>& ys, bool require_positive) {
  if (t.size() != y.size()) throw std::invalid_argument("series lengths differ");
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < w.t_min || t[i] > w.t_max) continue;
    if (require_positive && !(y[i] > 0.0)) continue;
    ts.push_back(t[i]);
    ys.push_back(y[i]);
  }
}

}  // namespace

DecayFit fit_decay(std::span<const double> t, std::span<const double> y, const FitWindow& window,
                   const DecayFitOptions& options) {
  if (!(window.t_min >= 10.0))
    throw std::invalid_argument("fit window must start at t >= 10 (log log t and the far field)");
  std::vector<double> ts, ys;
  gather_window(t, y, window, ts, ys, true);
  const int m = static_cast<int>(ts.size());
  if (m < options.min_samples)
    throw std::invalid_argument("fit window holds " + std::to_string(m) +
                                " samples; need at least " + std::to_string(options.min_samples));

  DecayFit fit;
  fit.window = window;
  fit.samples = m;
  fit.gamma_fixed = options.fix_gamma;
  fit.a_fixed = options.fix_a;
  // gamma and a are collinear on short windows; pin gamma below one decade
  if (!fit.gamma_fixed && ts.back() / ts.front() < 10.0) fit.gamma_fixed = true;

  const int cols = 1 + (fit.a_fixed ? 0 : 1) + (fit.gamma_fixed ? 0 : 1);
  Eigen::MatrixXd design(m, cols);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    const double lt = std::log(ts[static_cast<size_t>(i)]);
    int col = 0;
    design(i, col++) = 1.0;
    if (!fit.a_fixed) design(i, col++) = -lt;
    if (!fit.gamma_fixed) design(i, col++) = -std::log(lt);
    rhs(i) = std::log(ys[static_cast<size_t>(i)]);
    if (fit.a_fixed) rhs(i) += options.a_value * lt;
    if (fit.gamma_fixed) rhs(i) += options.gamma_value * std::log(lt);
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(rhs);
  int col = 0;
  fit.c = beta(col++);
  fit.a = fit.a_fixed ? options.a_value : beta(col++);
  fit.gamma = fit.gamma_fixed ? options.gamma_value : beta(col++);
  fit.residual_rms = std::sqrt((design * beta - rhs).squaredNorm() / m);
  return fit;
}

GrowthCorrelation growth_correlation(std::span<const double> t, std::span<const double> y,
                                     const FitWindow& window) {
  std::vector<double> ts, ys;
  gather_window(t, y, window, ts, ys, true);
  const size_t m = ts.size();
  if (m < 3) throw std::invalid_argument("growth correlation needs at least three samples");

  GrowthCorrelation g;
  g.samples = static_cast<int>(m);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < m; ++i) {
    const double x = std::log(ts[i]);
    const double w = std::sqrt(ts[i]) * ys[i];
    sx += x;
    sy += w;
    sxx += x * x;
    sxy += x * w;
    syy += w * w;
  }
  const double n = static_cast<double>(m);
  const double cov = sxy - sx * sy / n;
  const double var_x = sxx - sx * sx / n;
  const double var_y = syy - sy * sy / n;
  g.slope = cov / var_x;
  g.intercept = (sy - g.slope * sx) / n;
  g.r_squared = var_y > 0.0 ? cov * cov / (var_x * var_y) : 1.0;
  return g;
}

LpInterpolationReport lp_interpolation_check(std::span<const double> t,
                                             std::span<const double> y2,
                                             std::span<const double> y4,
                                             std::span<const double> y_inf,
                                             const FitWindow& window, double tolerance) {
  DecayFitOptions opt;
  opt.fix_gamma = true;
  LpInterpolationReport report;
  report.tolerance = tolerance;
  report.a2 = fit_decay(t, y2, window, opt).a;
  report.a4 = fit_decay(t, y4, window, opt).a;
  report.a_inf = fit_decay(t, y_inf, window, opt).a;
  const bool gap_ok = std::abs((report.a_inf - report.a2) - 0.5) <= tolerance;
  const bool middle_ok = report.a4 >= std::min(report.a2, report.a_inf) - tolerance &&
                         report.a4 <= std::max(report.a2, report.a_inf) + tolerance;
  report.pass = gap_ok && middle_ok;
  return report;
}

}  // namespace kgres
