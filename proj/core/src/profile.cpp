#include "kgres/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kgres {

void HyperbolicChart::validate() const {
  if (!(B > 0.0)) throw std::invalid_argument("chart support radius must be positive");
  if (!(tau0 > 1.0 + 2.0 * B))
    throw std::invalid_argument("chart tau0 must exceed 1 + 2B = " + std::to_string(1.0 + 2.0 * B));
  if (!(tau_max > tau0)) throw std::invalid_argument("chart tau_max must exceed tau0");
  if (!(tau_ratio > 1.0)) throw std::invalid_argument("chart tau_ratio must exceed 1");
  if (z_count < 2) throw std::invalid_argument("chart needs at least two z nodes");
  if (!(z_max > 0.0)) throw std::invalid_argument("chart z_max must be positive");
}

std::vector<double> geometric_taus(double tau0, double tau_max, double ratio) {
  std::vector<double> taus;
  for (double tau = tau0; tau <= tau_max * (1.0 + 1e-12); tau *= ratio) taus.push_back(tau);
  if (taus.empty()) taus.push_back(tau0);
  return taus;
}

std::vector<double> HyperbolicChart::tau_nodes() const { return geometric_taus(tau0, tau_max, tau_ratio); }

std::vector<double> HyperbolicChart::z_nodes() const {
  std::vector<double> zs(static_cast<size_t>(z_count));
  for (int i = 0; i < z_count; ++i)
    zs[static_cast<size_t>(i)] = -z_max + 2.0 * z_max * i / (z_count - 1);
  return zs;
}

std::pair<double, double> HyperbolicChart::to_tx(double tau, double z) const {
  return {tau * std::cosh(z) - 2.0 * B, tau * std::sinh(z)};
}

std::pair<double, double> HyperbolicChart::to_tauz(double t, double x) const {
  const double s = t + 2.0 * B;
  const double tau2 = (s - x) * (s + x);
  if (!(tau2 > 0.0)) throw std::invalid_argument("(t, x) lies outside the chart");
  const double tau = std::sqrt(tau2);
  return {tau, std::asinh(x / tau)};
}

double HyperbolicChart::required_time() const {
  return tau_max * std::cosh(z_max) - 2.0 * B;
}

ProfileTrajectory ProfileTrajectory::ray(size_t i_z) const {
  ProfileTrajectory out;
  out.source = source;
  out.masses = masses;
  out.weight = weight;
  out.taus = taus;
  out.zs = {zs.at(i_z)};
  out.max_reconstruction_residual = max_reconstruction_residual;
  out.max_abs_u = max_abs_u;
  out.samples.reserve(taus.size());
  for (size_t it = 0; it < taus.size(); ++it) out.samples.push_back(at(it, i_z));
  return out;
}

std::vector<FieldProbeRequest> chart_probe_requests(const HyperbolicChart& chart) {
  chart.validate();
  std::vector<FieldProbeRequest> reqs;
  for (double tau : chart.tau_nodes())
    for (double z : chart.z_nodes()) {
      const auto [t, x] = chart.to_tx(tau, z);
      reqs.push_back({t, x});
    }
  return reqs;
}

std::vector<FieldProbeRequest> ray_probe_requests(double B, double z,
                                                  std::span<const double> taus) {
  std::vector<FieldProbeRequest> reqs;
  for (double tau : taus)
    reqs.push_back({tau * std::cosh(z) - 2.0 * B, tau * std::sinh(z)});
  return reqs;
}

namespace {

// alpha, v, dv/dtau from one interpolated probe
ProfileSample make_sample(const std::vector<double>& masses, const WeightFunction& chi,
                          double tau, double z, const FieldProbeSample& probe,
                          double* residual_out, double* max_u_out) {
  const int n = static_cast<int>(masses.size());
  const double w0 = std::cosh(z), w1 = std::sinh(z);
  const double c = chi.chi(z);
  const double rt = std::sqrt(tau);

  ProfileSample s;
  s.tau = tau;
  s.z = z;
  s.alpha.resize(static_cast<size_t>(n));
  s.v.resize(static_cast<size_t>(n));
  s.v_tau.resize(static_cast<size_t>(n));
  s.u = probe.u;
  for (int j = 0; j < n; ++j) {
    const size_t js = static_cast<size_t>(j);
    const double u = probe.u[js];
    const double du_tau = w0 * probe.ut[js] + w1 * probe.ux[js];  // d/dtau at fixed z
    const double v = rt * u / c;
    const double v_tau = u / (2.0 * rt * c) + rt / c * du_tau;
    s.v[js] = v;
    s.v_tau[js] = v_tau;
    const double mj = masses[js];
    const Complex rot = std::polar(1.0, -mj * tau);
    s.alpha[js] = rot * Complex(v, -v_tau / mj);
    if (residual_out) {
      const double rebuilt = c / rt * (s.alpha[js] * std::polar(1.0, mj * tau)).real();
      *residual_out = std::max(*residual_out, std::abs(rebuilt - u));
    }
    if (max_u_out) *max_u_out = std::max(*max_u_out, std::abs(u));
  }
  return s;
}

void check_probes(std::span<const FieldProbeSample> samples, size_t expected) {
  if (samples.size() != expected)
    throw std::invalid_argument("probe sample count does not match the chart layout");
  for (const auto& s : samples)
    if (!s.filled)
      throw std::invalid_argument(
          "probe samples incomplete: the run does not cover the requested (t, x) range");
}

}  // namespace

ProfileTrajectory extract_profile(const MassVector& m, const WeightFunction& chi,
                                  const HyperbolicChart& chart,
                                  std::span<const FieldProbeSample> samples) {
  chart.validate();
  ProfileTrajectory traj;
  traj.source = ProfileTrajectory::Source::PdeExtracted;
  traj.masses = m.as_doubles();
  traj.weight = chi;
  traj.taus = chart.tau_nodes();
  traj.zs = chart.z_nodes();
  check_probes(samples, traj.taus.size() * traj.zs.size());

  size_t idx = 0;
  for (double tau : traj.taus)
    for (double z : traj.zs)
      traj.samples.push_back(make_sample(traj.masses, chi, tau, z, samples[idx++],
                                         &traj.max_reconstruction_residual, &traj.max_abs_u));
  return traj;
}

ProfileTrajectory extract_profile_ray(const MassVector& m, const WeightFunction& chi, double B,
                                      double z, std::span<const double> taus,
                                      std::span<const FieldProbeSample> samples) {
  if (!(taus.size() >= 2)) throw std::invalid_argument("ray extraction needs at least two taus");
  if (!(taus.front() > 1.0 + 2.0 * B))
    throw std::invalid_argument("ray tau0 must exceed 1 + 2B");
  for (size_t i = 1; i < taus.size(); ++i)
    if (!(taus[i] > taus[i - 1]))
      throw std::invalid_argument("ray taus must be strictly increasing");
  ProfileTrajectory traj;
  traj.source = ProfileTrajectory::Source::PdeExtracted;
  traj.masses = m.as_doubles();
  traj.weight = chi;
  traj.taus.assign(taus.begin(), taus.end());
  traj.zs = {z};
  check_probes(samples, taus.size());

  size_t idx = 0;
  for (double tau : traj.taus)
    traj.samples.push_back(make_sample(traj.masses, chi, tau, z, samples[idx++],
                                       &traj.max_reconstruction_residual, &traj.max_abs_u));
  return traj;
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kE1 = 35.0 / 384 - 5179.0 / 57600, kE3 = 500.0 / 1113 - 7571.0 / 16695,
                 kE4 = 125.0 / 192 - 393.0 / 640, kE5 = -2187.0 / 6784 + 92097.0 / 339200,
                 kE6 = 11.0 / 84 - 187.0 / 2100, kE7 = -1.0 / 40;

}  // namespace

ProfileTrajectory integrate_profile_ode(const ReducedSystem& sys, const WeightFunction& chi,
                                        double z, std::span<const Complex> alpha0,
                                        std::span<const double> output_taus,
                                        const OdeOptions& options) {
  const int n = sys.n_components();
  if (static_cast<int>(alpha0.size()) != n)
    throw std::invalid_argument("alpha0 size does not match the system");
  if (output_taus.size() < 2 || !(output_taus.front() > 0.0))
    throw std::invalid_argument("output taus must start positive and have at least two entries");
  for (size_t i = 1; i < output_taus.size(); ++i)
    if (!(output_taus[i] > output_taus[i - 1]))
      throw std::invalid_argument("output taus must be strictly increasing");

  const HyperbolaPoint w(z);
  const double chi2 = chi.chi2(z);
  const Complex kI{0.0, 1.0};

  auto rhs = [&](double tau, const ComplexVec& y, ComplexVec& dy) {
    const auto f = sys.eval_reduced(w, y);
    for (int j = 0; j < n; ++j)
      dy[static_cast<size_t>(j)] = -kI * chi2 / (8.0 * tau) * f[static_cast<size_t>(j)];
    if (options.include_nonresonant) {
      const auto s = sys.nonresonant_term(w, y, tau, chi2);
      for (int j = 0; j < n; ++j) dy[static_cast<size_t>(j)] += s[static_cast<size_t>(j)];
    }
  };

  ProfileTrajectory traj;
  traj.source = ProfileTrajectory::Source::OdeIntegrated;
  traj.masses = sys.masses().as_doubles();
  traj.weight = chi;
  traj.taus.assign(output_taus.begin(), output_taus.end());
  traj.zs = {z};

  ComplexVec y(alpha0.begin(), alpha0.end());
  ComplexVec k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()), k6(y.size()),
      k7(y.size()), ytmp(y.size()), ynew(y.size());

  double tau = output_taus.front();
  auto emit = [&](double at_tau) {
    ProfileSample s;
    s.tau = at_tau;
    s.z = z;
    s.alpha = y;
    traj.samples.push_back(std::move(s));
  };
  emit(tau);

  double h = options.initial_step > 0.0 ? options.initial_step : 0.05 * tau;
  rhs(tau, y, k1);
  bool have_k1 = true;

  for (size_t target_idx = 1; target_idx < traj.taus.size(); ++target_idx) {
    const double target = traj.taus[target_idx];
    while (tau < target) {
      if (h < 1e-14 * tau) throw std::runtime_error("profile ODE step size underflow");
      const double step = std::min(h, target - tau);
      if (!have_k1) {
        rhs(tau, y, k1);
        have_k1 = true;
      }
      auto stage = [&](ComplexVec& out, std::initializer_list<std::pair<const ComplexVec*, double>> terms) {
        for (size_t i = 0; i < y.size(); ++i) {
          Complex acc = y[i];
          for (const auto& [kv, c] : terms) acc += step * c * (*kv)[i];
          out[i] = acc;
        }
      };
      stage(ytmp, {{&k1, kA21}});
      rhs(tau + step / 5.0, ytmp, k2);
      stage(ytmp, {{&k1, kA31}, {&k2, kA32}});
      rhs(tau + 3.0 * step / 10.0, ytmp, k3);
      stage(ytmp, {{&k1, kA41}, {&k2, kA42}, {&k3, kA43}});
      rhs(tau + 4.0 * step / 5.0, ytmp, k4);
      stage(ytmp, {{&k1, kA51}, {&k2, kA52}, {&k3, kA53}, {&k4, kA54}});
      rhs(tau + 8.0 * step / 9.0, ytmp, k5);
      stage(ytmp, {{&k1, kA61}, {&k2, kA62}, {&k3, kA63}, {&k4, kA64}, {&k5, kA65}});
      rhs(tau + step, ytmp, k6);
      for (size_t i = 0; i < y.size(); ++i)
        ynew[i] = y[i] + step * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] + kB5 * k5[i] +
                                 kB6 * k6[i]);
      rhs(tau + step, ynew, k7);

      double err = 0.0;
      for (size_t i = 0; i < y.size(); ++i) {
        const Complex e = step * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] +
                                  kE6 * k6[i] + kE7 * k7[i]);
        const double sc =
            options.abs_tol + options.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        err += std::norm(e) / (sc * sc);
      }
      err = std::sqrt(err / static_cast<double>(y.size()));

      if (err <= 1.0) {
        tau += step;
        y = ynew;
        k1 = k7;  // first-same-as-last
        have_k1 = true;
      } else {
        have_k1 = false;
      }
      const double factor = std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
      h = step * factor;
    }
    emit(target);
  }
  return traj;
}

OscillatorySeries oscillatory_partial_integrals(const ProfileTrajectory& traj,
                                                const std::array<int, 4>& components,
                                                const std::array<int, 4>& signs, double b) {
  if (traj.zs.size() != 1)
    throw std::invalid_argument("oscillatory integrals need a single-rapidity trajectory");
  const size_t n_tau = traj.taus.size();
  if (n_tau < 2) throw std::invalid_argument("trajectory too short");
  const int n = static_cast<int>(traj.masses.size());
  for (int c : components)
    if (c < 1 || c > n) throw std::invalid_argument("component index out of range");

  if (b != 0.0) {
    double max_step = 0.0;
    for (size_t i = 1; i < n_tau; ++i) max_step = std::max(max_step, traj.taus[i] - traj.taus[i - 1]);
    const double allowed = 2.0 * std::numbers::pi / (32.0 * std::abs(b));
    if (max_step > allowed)
      throw std::runtime_error("trajectory too coarse for b = " + std::to_string(b) +
                               ": max step " + std::to_string(max_step) + " exceeds " +
                               std::to_string(allowed));
  }

  auto product = [&](size_t i_tau) {
    Complex p{1.0, 0.0};
    const auto& alpha = traj.samples[i_tau].alpha;
    for (int l = 0; l < 3 + 1; ++l) {
      const Complex a = alpha[static_cast<size_t>(components[static_cast<size_t>(l)] - 1)];
      p *= signs[static_cast<size_t>(l)] > 0 ? a : std::conj(a);
    }
    return p;
  };

  OscillatorySeries out;
  out.b = b;
  out.taus = traj.taus;
  out.partials.resize(n_tau);
  Complex acc{};
  out.partials[0] = acc;
  for (size_t i = 1; i < n_tau; ++i) {
    const double ta = traj.taus[i - 1], tb = traj.taus[i];
    const double tm = 0.5 * (ta + tb);
    const Complex pa = product(i - 1), pb = product(i);
    const Complex pm = 0.5 * (pa + pb);  // slowly varying factor, linear interpolation
    auto f = [&](double t, const Complex& p) { return p * std::polar(1.0, b * t) / t; };
    acc += (tb - ta) / 6.0 * (f(ta, pa) + 4.0 * f(tm, pm) + f(tb, pb));
    out.partials[i] = acc;
    out.sup_abs = std::max(out.sup_abs, std::abs(acc));
  }
  return out;
}

std::vector<std::pair<double, double>> energy_diagnostic(const ProfileTrajectory& traj) {
  if (traj.source != ProfileTrajectory::Source::PdeExtracted)
    throw std::invalid_argument("energy diagnostic needs an extracted trajectory");
  if (traj.zs.size() < 3)
    throw std::invalid_argument("energy diagnostic needs at least three z nodes");
  const size_t nz = traj.zs.size();
  const int n = static_cast<int>(traj.masses.size());
  std::vector<std::pair<double, double>> out;
  out.reserve(traj.taus.size());

  std::vector<double> density(nz);
  for (size_t it = 0; it < traj.taus.size(); ++it) {
    const double tau = traj.taus[it];
    double integral = 0.0;
    for (int j = 0; j < n; ++j) {
      const size_t js = static_cast<size_t>(j);
      const double m2 = traj.masses[js] * traj.masses[js];
      for (size_t iz = 0; iz < nz; ++iz) {
        const auto& s = traj.at(it, iz);
        // centered dz v, one-sided at the ends
        double vz;
        if (iz == 0) {
          vz = (traj.at(it, 1).v[js] - s.v[js]) / (traj.zs[1] - traj.zs[0]);
        } else if (iz == nz - 1) {
          vz = (s.v[js] - traj.at(it, iz - 1).v[js]) / (traj.zs[iz] - traj.zs[iz - 1]);
        } else {
          vz = (traj.at(it, iz + 1).v[js] - traj.at(it, iz - 1).v[js]) /
               (traj.zs[iz + 1] - traj.zs[iz - 1]);
        }
        const double vt = s.v_tau[js];
        const double vv = s.v[js];
        density[iz] = vt * vt + (vz / tau) * (vz / tau) + m2 * vv * vv;
      }
      for (size_t iz = 0; iz + 1 < nz; ++iz)
        integral += 0.5 * (density[iz] + density[iz + 1]) * (traj.zs[iz + 1] - traj.zs[iz]);
    }
    out.emplace_back(tau, 0.5 * integral);
  }
  return out;
}

SlowVariationReport slow_variation_check(const ProfileTrajectory& traj, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (traj.taus.size() < 3) throw std::invalid_argument("need at least three tau samples");

  SlowVariationReport report;
  const size_t nz = traj.zs.size();
  const size_t nt = traj.taus.size();

  // geometric buckets spanning the trajectory; decades when the span allows,
  // otherwise two halves of the available range
  const double t_lo = traj.taus.front(), t_hi = traj.taus.back();
  const double span = t_hi / t_lo;
  const int buckets = span >= 100.0 ? static_cast<int>(std::floor(std::log10(span))) : 2;
  const double bucket_ratio = std::pow(span, 1.0 / buckets);
  report.bucket_sup.assign(static_cast<size_t>(buckets), 0.0);

  for (size_t iz = 0; iz < nz; ++iz) {
    for (size_t it = 1; it + 1 < nt; ++it) {
      const double dtau = traj.taus[it + 1] - traj.taus[it - 1];
      double d2 = 0.0;
      const auto& hi = traj.at(it + 1, iz).alpha;
      const auto& lo = traj.at(it - 1, iz).alpha;
      for (size_t j = 0; j < hi.size(); ++j) d2 += std::norm(hi[j] - lo[j]);
      const double q = traj.taus[it] * std::sqrt(d2) / dtau / epsilon;
      report.sup = std::max(report.sup, q);
      int bucket = static_cast<int>(std::floor(std::log(traj.taus[it] / t_lo) / std::log(bucket_ratio)));
      bucket = std::clamp(bucket, 0, buckets - 1);
      report.bucket_sup[static_cast<size_t>(bucket)] = std::max(report.bucket_sup[static_cast<size_t>(bucket)], q);
    }
  }
  for (size_t i = 0; i + 1 < report.bucket_sup.size(); ++i) {
    if (report.bucket_sup[i] > 0.0)
      report.max_bucket_ratio =
          std::max(report.max_bucket_ratio, report.bucket_sup[i + 1] / report.bucket_sup[i]);
  }
  report.bounded = report.max_bucket_ratio <= 1.5;
  return report;
}

}  // namespace kgres
