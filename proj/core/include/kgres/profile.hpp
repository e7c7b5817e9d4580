#pragma once

#include <array>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "kgres/reduced.hpp"
#include "kgres/solver.hpp"

namespace kgres {

// chi(z) = (cosh z)^{-kappa}: positive, exponentially decaying with explicit
// constants chi <= 2^kappa e^{-kappa |z|} and |chi'| <= kappa chi.
struct WeightFunction {
  double kappa = 2.0;
  double chi(double z) const { return std::pow(std::cosh(z), -kappa); }
  double chi2(double z) const {
    const double c = chi(z);
    return c * c;
  }
  double dchi(double z) const { return -kappa * std::tanh(z) * chi(z); }
  double envelope_constant() const { return std::exp2(kappa); }
};

// Region chart t + 2B = tau cosh z, x = tau sinh z with geometric tau samples
// and a uniform rapidity grid.
struct HyperbolicChart {
  double B = 1.0;
  double tau0 = 3.15;   // requires tau0 > 1 + 2B
  double tau_max = 40.0;
  double tau_ratio = 1.05;
  double z_max = 3.0;
  int z_count = 33;

  void validate() const;
  std::vector<double> tau_nodes() const;
  std::vector<double> z_nodes() const;
  std::pair<double, double> to_tx(double tau, double z) const;
  std::pair<double, double> to_tauz(double t, double x) const;
  // largest run time the chart extraction will ask for
  double required_time() const;
};

struct ProfileSample {
  double tau = 0.0, z = 0.0;
  ComplexVec alpha;
  std::vector<double> v, v_tau;  // real hyperbolic fields per component
  std::vector<double> u;         // interpolated u, kept for the reconstruction identity
};

struct ProfileTrajectory {
  enum class Source { PdeExtracted, OdeIntegrated };
  Source source = Source::OdeIntegrated;
  std::vector<double> masses;
  WeightFunction weight;
  std::vector<double> taus;            // tau grid (outer index)
  std::vector<double> zs;              // z grid (inner index)
  std::vector<ProfileSample> samples;  // size taus.size() * zs.size(), tau-major
  double max_reconstruction_residual = 0.0;  // PDE extractions only
  double max_abs_u = 0.0;

  const ProfileSample& at(size_t i_tau, size_t i_z) const {
    return samples[i_tau * zs.size() + i_z];
  }
  // trajectory restricted to one rapidity value
  ProfileTrajectory ray(size_t i_z) const;
};

// Probe request lists matching the extraction sample layout (tau-major).
std::vector<FieldProbeRequest> chart_probe_requests(const HyperbolicChart& chart);
std::vector<FieldProbeRequest> ray_probe_requests(double B, double z,
                                                  std::span<const double> taus);

// Turns interpolated field probes into amplitudes:
//   v = sqrt(tau) u / chi,
//   dv/dtau = u / (2 sqrt(tau) chi) + (sqrt(tau)/chi)(w0 ut + w1 ux),
//   alpha_j = e^{-i m_j tau} (v_j - (i/m_j) dv_j/dtau).
// The samples must be the filled probes for chart_probe_requests(chart).
ProfileTrajectory extract_profile(const MassVector& m, const WeightFunction& chi,
                                  const HyperbolicChart& chart,
                                  std::span<const FieldProbeSample> samples);
ProfileTrajectory extract_profile_ray(const MassVector& m, const WeightFunction& chi, double B,
                                      double z, std::span<const double> taus,
                                      std::span<const FieldProbeSample> samples);

struct OdeOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-13;
  double initial_step = 0.0;      // 0 picks a conservative default
  bool include_nonresonant = false;
};

// Integrates d alpha / d tau = -(i chi(z)^2 / (8 tau)) F^{c,red}(w(z), alpha)
// (optionally plus the oscillatory term) with an embedded Dormand-Prince 5(4)
// pair, landing exactly on the requested output taus.
ProfileTrajectory integrate_profile_ode(const ReducedSystem& sys, const WeightFunction& chi,
                                        double z, std::span<const Complex> alpha0,
                                        std::span<const double> output_taus,
                                        const OdeOptions& options = {});

std::vector<double> geometric_taus(double tau0, double tau_max, double ratio);

// Partial integrals int_{tau0}^{tau} (prod alpha^(sign)) e^{i b s} / s ds along
// a single-rapidity trajectory; the b = 0 case is the resonant control.
struct OscillatorySeries {
  double b = 0.0;
  std::vector<double> taus;
  std::vector<Complex> partials;
  double sup_abs = 0.0;
};
OscillatorySeries oscillatory_partial_integrals(const ProfileTrajectory& traj,
                                                const std::array<int, 4>& components,
                                                const std::array<int, 4>& signs, double b);

// E_0(tau) = (1/2) sum_j int |dv/dtau|^2 + |dz v / tau|^2 + m_j^2 |v|^2 dz on
// the chart's z grid (finite differences in z, trapezoid quadrature).
std::vector<std::pair<double, double>> energy_diagnostic(const ProfileTrajectory& extracted);

struct SlowVariationReport {
  double sup = 0.0;                 // sup over samples of tau |d alpha / d tau| / eps
  std::vector<double> bucket_sup;   // per geometric bucket of tau
  double max_bucket_ratio = 0.0;    // consecutive bucket ratio
  bool bounded = false;             // max ratio <= 1.5
};
SlowVariationReport slow_variation_check(const ProfileTrajectory& traj, double epsilon);

}  // namespace kgres
