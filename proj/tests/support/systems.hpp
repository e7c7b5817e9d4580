#pragma once

// Shared builders for the example systems exercised across the test suites.

#include <complex>
#include <random>
#include <vector>

#include "kgres/algebra.hpp"
#include "kgres/reduced.hpp"

namespace kgres::testing {

inline MassVector mass13() { return MassVector({Rational(1), Rational(3)}); }

// (box + m1^2) u1 = b1 u1^2 u2,  (box + 9 m1^2) u2 = b2 u1^3
inline ReducedSystem cubic_pair(double b1 = 1.0, double b2 = 1.0) {
  CubicNonlinearity F(
      2, {CubicNonlinearity::term(1, b1, {{1, Deriv::None}, {1, Deriv::None}, {2, Deriv::None}}),
          CubicNonlinearity::term(2, b2, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}})});
  return ReducedSystem(mass13(), std::move(F));
}

// Four components with m4 = m1 + m2 + m3 and cyclic triple products.
inline ReducedSystem four_chain(double c1 = 1.0, double c2 = 1.0, double c3 = 1.0,
                                double c4 = 1.0) {
  MassVector m({Rational(1), Rational(2), Rational(3), Rational(6)});
  CubicNonlinearity F(
      4, {CubicNonlinearity::term(1, c1, {{2, Deriv::None}, {3, Deriv::None}, {4, Deriv::None}}),
          CubicNonlinearity::term(2, c2, {{3, Deriv::None}, {4, Deriv::None}, {1, Deriv::None}}),
          CubicNonlinearity::term(3, c3, {{4, Deriv::None}, {1, Deriv::None}, {2, Deriv::None}}),
          CubicNonlinearity::term(4, c4, {{1, Deriv::None}, {2, Deriv::None}, {3, Deriv::None}})});
  return ReducedSystem(std::move(m), std::move(F));
}

// Derivative-dissipative pair with m2 = 3 m1:
//   F1 = -|dt u|^2 dt u1 - (dt u1)^2 dt u2
//   F2 = -|dt u|^2 dt u2 + (dt u1)^3
inline ReducedSystem dissipative_pair() {
  CubicNonlinearity F(
      2, {CubicNonlinearity::term(1, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {1, Deriv::Dt}}),
          CubicNonlinearity::term(1, -1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {1, Deriv::Dt}}),
          CubicNonlinearity::term(1, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {2, Deriv::Dt}}),
          CubicNonlinearity::term(2, -1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {2, Deriv::Dt}}),
          CubicNonlinearity::term(2, -1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {2, Deriv::Dt}}),
          CubicNonlinearity::term(2, 1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {1, Deriv::Dt}})});
  return ReducedSystem(mass13(), std::move(F));
}

// Four-chain with c1 = c2 = c3 = 0, c4 = 1: the non-decaying counterexample.
inline ReducedSystem forced_chain() { return four_chain(0.0, 0.0, 0.0, 1.0); }

// Random small system for the oracle-equivalence suites.
struct RandomSystem {
  MassVector masses;
  CubicNonlinearity nonlinearity;
  RandomSystem(MassVector m, CubicNonlinearity f)
      : masses(std::move(m)), nonlinearity(std::move(f)) {}
};

inline RandomSystem random_system(std::mt19937& rng) {
  std::uniform_int_distribution<int> n_dist(1, 4);
  const int n = n_dist(rng);
  std::uniform_int_distribution<int> num(1, 8), den(1, 4);
  std::vector<Rational> raw;
  for (int k = 0; k < n; ++k) raw.emplace_back(num(rng), den(rng));
  std::sort(raw.begin(), raw.end());
  MassVector m(std::move(raw));

  std::uniform_int_distribution<int> term_count(1, 6), comp(1, n), dv(0, 2);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::vector<CubicTerm> terms;
  const int count = term_count(rng);
  for (int i = 0; i < count; ++i) {
    double c = coeff(rng);
    if (c == 0.0) c = 1.0;
    terms.push_back(CubicNonlinearity::term(comp(rng), c,
                                            {{comp(rng), static_cast<Deriv>(dv(rng))},
                                             {comp(rng), static_cast<Deriv>(dv(rng))},
                                             {comp(rng), static_cast<Deriv>(dv(rng))}}));
  }
  return RandomSystem(std::move(m), CubicNonlinearity(n, std::move(terms)));
}

inline ComplexVec random_amplitudes(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  ComplexVec Y(static_cast<size_t>(n));
  for (auto& y : Y) y = Complex(box(rng), box(rng));
  return Y;
}

}  // namespace kgres::testing
