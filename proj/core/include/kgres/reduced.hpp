#pragma once

#include <complex>
#include <span>
#include <vector>

#include "kgres/algebra.hpp"

namespace kgres {

using Complex = std::complex<double>;
using ComplexVec = std::vector<Complex>;

// Point w = (cosh z, sinh z) on the upper unit hyperbola.
struct HyperbolaPoint {
  double z = 0.0;
  double w0 = 1.0;  // cosh z
  double w1 = 0.0;  // sinh z
  HyperbolaPoint() = default;
  explicit HyperbolaPoint(double rapidity)
      : z(rapidity), w0(std::cosh(rapidity)), w1(std::sinh(rapidity)) {}
};

// Substitution value of one monomial at (1, i w0 m, -i w1 m), divided by 8.
// Constant in w up to the powers w0^{#Dt} w1^{#Dx}, which are applied at
// evaluation time.
Complex omega_coefficient(const CubicTerm& term, const MassVector& m, const HyperbolaPoint& w);

// A mass vector plus a cubic nonlinearity, with the resonance table rebuilt
// from the masses and the sign sums flattened into evaluation plans for the
// resonant part F^{c,red} and the oscillatory remainder.
class ReducedSystem {
 public:
  ReducedSystem(MassVector masses, CubicNonlinearity F);

  int n_components() const { return masses_.size(); }
  const MassVector& masses() const { return masses_; }
  const CubicNonlinearity& nonlinearity() const { return F_; }
  const ResonanceTable& table() const { return table_; }

  // F_j^{c,red}(w, Y) = (1/m_j) sum_{a, s in S_j^a} F_{j,a}(1, i w0 m, -i w1 m)
  //                     s1^{|I|} s2^{|J|} s3^{|K|} Y_{a1}^{(s1)} Y_{a2}^{(s2)} Y_{a3}^{(s3)}.
  ComplexVec eval_reduced(const HyperbolaPoint& w, std::span<const Complex> Y) const;

  // Oscillatory part of the amplitude equation,
  //   S_j(tau, z) = -(i chi2 / (m_j tau)) sum over the complementary sign
  //   triples of Omega * sign factors * Y products * e^{i (s.m_a - m_j) tau}.
  ComplexVec nonresonant_term(const HyperbolaPoint& w, std::span<const Complex> Y,
                              double tau, double chi2) const;

 private:
  struct Entry {
    int target0;                 // 0-based target component
    Complex base;                // coefficient including sign factors and 1/m_j (and 1/8 for oscillatory entries)
    int pow_w0, pow_w1;          // powers of cosh z / sinh z
    std::array<int, 3> comp0;    // 0-based factor components
    std::array<bool, 3> conj;    // conjugate Y factor?
    double phase;                // s.m_a - m_j (0 for resonant entries)
  };

  static Complex product(const Entry& e, const HyperbolaPoint& w, std::span<const Complex> Y);

  MassVector masses_;
  CubicNonlinearity F_;
  ResonanceTable table_;
  std::vector<Entry> resonant_;
  std::vector<Entry> oscillatory_;
};

// Independent route to F^{c,red}: expands the cubic form on real standing
// waves Re(Y e^{i m theta}) and reads off one Fourier coefficient of the
// resulting trigonometric polynomial with an exact DFT. Used as the oracle
// against eval_reduced; the two share no code path beyond eval_nonlinearity.
ComplexVec reduced_oracle(const ReducedSystem& sys, const HyperbolaPoint& w,
                          std::span<const Complex> Y);

}  // namespace kgres
