#include "kgres/reduced.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kgres {

namespace {

constexpr Complex kI{0.0, 1.0};

// i^pt * (-i)^px
Complex unit_phase(int pt, int px) {
  Complex p{1.0, 0.0};
  for (int k = 0; k < pt; ++k) p *= kI;
  for (int k = 0; k < px; ++k) p *= -kI;
  return p;
}

struct Substitution {
  Complex base;  // coeff * i^{#Dt} (-i)^{#Dx} * product of factor masses on derivative slots
  int pow_w0;
  int pow_w1;
};

Substitution substitution_value(const CubicTerm& term, const MassVector& m) {
  Substitution s{Complex(term.coeff, 0.0), 0, 0};
  double mass_prod = 1.0;
  for (const auto& f : term.factors) {
    switch (f.deriv) {
      case Deriv::None:
        break;
      case Deriv::Dt:
        ++s.pow_w0;
        mass_prod *= m[f.component - 1].value();
        break;
      case Deriv::Dx:
        ++s.pow_w1;
        mass_prod *= m[f.component - 1].value();
        break;
    }
  }
  s.base *= unit_phase(s.pow_w0, s.pow_w1) * mass_prod;
  return s;
}

int deriv_order(Deriv d) { return d == Deriv::None ? 0 : 1; }

double ipow(double x, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= x;
  return r;
}

}  // namespace

Complex omega_coefficient(const CubicTerm& term, const MassVector& m, const HyperbolaPoint& w) {
  const Substitution s = substitution_value(term, m);
  return 0.125 * s.base * ipow(w.w0, s.pow_w0) * ipow(w.w1, s.pow_w1);
}

ReducedSystem::ReducedSystem(MassVector masses, CubicNonlinearity F)
    : masses_(std::move(masses)), F_(std::move(F)), table_(ResonanceTable::build(masses_)) {
  if (F_.n_components() != masses_.size())
    throw std::invalid_argument("nonlinearity and mass vector disagree on component count");
  const auto md = masses_.as_doubles();
  for (const auto& term : F_.terms()) {
    const Substitution s = substitution_value(term, masses_);
    const double mj = md[static_cast<size_t>(term.target - 1)];
    const std::array<int, 3> a{term.factors[0].component, term.factors[1].component,
                               term.factors[2].component};
    const std::array<int, 3> ord{deriv_order(term.factors[0].deriv),
                                 deriv_order(term.factors[1].deriv),
                                 deriv_order(term.factors[2].deriv)};
    for (const auto& signs : all_sign_triples()) {
      double sign_factor = 1.0;
      double phase = -mj;
      for (int l = 0; l < 3; ++l) {
        if (ord[static_cast<size_t>(l)]) sign_factor *= signs[static_cast<size_t>(l)];
        phase += signs[static_cast<size_t>(l)] * md[static_cast<size_t>(a[static_cast<size_t>(l)] - 1)];
      }
      Entry e;
      e.target0 = term.target - 1;
      e.pow_w0 = s.pow_w0;
      e.pow_w1 = s.pow_w1;
      e.comp0 = {a[0] - 1, a[1] - 1, a[2] - 1};
      e.conj = {signs[0] < 0, signs[1] < 0, signs[2] < 0};
      const bool resonant =
          (table_.resonant_mask(term.target, a) &
           (1u << ((signs[0] < 0 ? 1 : 0) | (signs[1] < 0 ? 2 : 0) | (signs[2] < 0 ? 4 : 0)))) != 0;
      if (resonant) {
        e.base = s.base * sign_factor / mj;
        e.phase = 0.0;
        resonant_.push_back(e);
      } else {
        e.base = 0.125 * s.base * sign_factor / mj;
        e.phase = phase;
        oscillatory_.push_back(e);
      }
    }
  }
}

Complex ReducedSystem::product(const Entry& e, const HyperbolaPoint& w,
                               std::span<const Complex> Y) {
  Complex p = e.base * ipow(w.w0, e.pow_w0) * ipow(w.w1, e.pow_w1);
  for (int l = 0; l < 3; ++l) {
    const Complex y = Y[static_cast<size_t>(e.comp0[static_cast<size_t>(l)])];
    p *= e.conj[static_cast<size_t>(l)] ? std::conj(y) : y;
  }
  return p;
}

ComplexVec ReducedSystem::eval_reduced(const HyperbolaPoint& w, std::span<const Complex> Y) const {
  if (static_cast<int>(Y.size()) != n_components())
    throw std::invalid_argument("eval_reduced: Y size mismatch");
  ComplexVec out(static_cast<size_t>(n_components()), Complex{});
  for (const auto& e : resonant_) out[static_cast<size_t>(e.target0)] += product(e, w, Y);
  return out;
}

ComplexVec ReducedSystem::nonresonant_term(const HyperbolaPoint& w, std::span<const Complex> Y,
                                           double tau, double chi2) const {
  if (static_cast<int>(Y.size()) != n_components())
    throw std::invalid_argument("nonresonant_term: Y size mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("nonresonant_term: tau must be positive");
  ComplexVec out(static_cast<size_t>(n_components()), Complex{});
  const Complex prefactor = -kI * chi2 / tau;
  for (const auto& e : oscillatory_) {
    out[static_cast<size_t>(e.target0)] +=
        prefactor * product(e, w, Y) * std::polar(1.0, e.phase * tau);
  }
  return out;
}

ComplexVec reduced_oracle(const ReducedSystem& sys, const HyperbolaPoint& w,
                          std::span<const Complex> Y) {
  const int n = sys.n_components();
  if (static_cast<int>(Y.size()) != n) throw std::invalid_argument("reduced_oracle: Y size mismatch");
  const auto& masses = sys.masses();
  const std::int64_t q = masses.common_denominator();
  const auto mu = masses.integer_masses();  // masses scaled to integers
  const std::int64_t mu_max = mu.back();
  const auto md = masses.as_doubles();

  // The standing-wave substitution turns F^c into a trigonometric polynomial
  // in theta with frequencies that are integer multiples of 1/q, of degree at
  // most 3 mu_max in e^{i theta / q}; heavy oversampling keeps the DFT exact
  // up to rounding. Sample phases m_k theta_s = 2 pi mu_k s / n_samples are
  // reduced in integer arithmetic so no large-argument trig error enters.
  const std::int64_t n_samples = 8 * (3 * mu_max * q) + 1;
  const double tick = 2.0 * std::numbers::pi / static_cast<double>(n_samples);
  auto phase = [&](std::int64_t mu_k, std::int64_t s) {
    const std::int64_t r = static_cast<std::int64_t>(
        (static_cast<__int128>(mu_k) * s) % n_samples);
    return tick * static_cast<double>(r);
  };

  std::vector<double> u(static_cast<size_t>(n)), ut(static_cast<size_t>(n)),
      ux(static_cast<size_t>(n));
  ComplexVec acc(static_cast<size_t>(n), Complex{});
  for (std::int64_t s = 0; s < n_samples; ++s) {
    for (int k = 0; k < n; ++k) {
      const Complex rot =
          Y[static_cast<size_t>(k)] * std::polar(1.0, phase(mu[static_cast<size_t>(k)], s));
      u[static_cast<size_t>(k)] = rot.real();
      ut[static_cast<size_t>(k)] = -w.w0 * md[static_cast<size_t>(k)] * rot.imag();
      ux[static_cast<size_t>(k)] = w.w1 * md[static_cast<size_t>(k)] * rot.imag();
    }
    const auto f = eval_nonlinearity(sys.nonlinearity(), u, ut, ux);
    for (int j = 0; j < n; ++j) {
      acc[static_cast<size_t>(j)] +=
          f[static_cast<size_t>(j)] * std::polar(1.0, -phase(mu[static_cast<size_t>(j)], s));
    }
  }
  ComplexVec out(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    out[static_cast<size_t>(j)] =
        acc[static_cast<size_t>(j)] * (8.0 / md[static_cast<size_t>(j)]) / static_cast<double>(n_samples);
  }
  return out;
}

}  // namespace kgres
