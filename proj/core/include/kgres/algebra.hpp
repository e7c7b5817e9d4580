#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "kgres/rational.hpp"

namespace kgres {

// Sorted vector of strictly positive exact masses m_1 <= ... <= m_N.
class MassVector {
 public:
  explicit MassVector(std::vector<Rational> masses);

  int size() const { return static_cast<int>(m_.size()); }
  const Rational& operator[](int j) const { return m_[static_cast<size_t>(j)]; }  // 0-based
  const std::vector<Rational>& values() const { return m_; }
  std::vector<double> as_doubles() const;
  double largest() const { return m_.back().value(); }

  // Scales every mass to an integer: masses[j] = integers()[j] / common_denominator().
  std::int64_t common_denominator() const;
  std::vector<std::int64_t> integer_masses() const;

 private:
  std::vector<Rational> m_;
};

enum class Deriv : std::uint8_t { None, Dt, Dx };

struct Factor {
  int component = 1;  // 1-based
  Deriv deriv = Deriv::None;
  friend bool operator==(const Factor&, const Factor&) = default;
};

// One cubic monomial  coeff * (d^I u_{a1})(d^J u_{a2})(d^K u_{a3}).
struct CubicTerm {
  int target = 1;  // 1-based component the term forces
  std::array<Factor, 3> factors{};
  double coeff = 0.0;
};

// Canonical list of cubic monomials: factors sorted, duplicates merged,
// zero coefficients dropped.
class CubicNonlinearity {
 public:
  CubicNonlinearity(int n_components, std::vector<CubicTerm> terms);

  int n_components() const { return n_; }
  const std::vector<CubicTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  // Convenience used by parsers/builders: coeff * prod_k (deriv_k u_{comp_k}).
  static CubicTerm term(int target, double coeff,
                        std::initializer_list<std::pair<int, Deriv>> factors);

 private:
  int n_ = 0;
  std::vector<CubicTerm> terms_;
};

// Pointwise evaluation of F(u, du): returns the N-vector of term sums.
std::vector<double> eval_nonlinearity(const CubicNonlinearity& F,
                                      std::span<const double> u,
                                      std::span<const double> ut,
                                      std::span<const double> ux);

using SignTriple = std::array<int, 3>;  // each entry +1 or -1

// The eight sign triples in a fixed deterministic order.
std::array<SignTriple, 8> all_sign_triples();

// For every (j, a) with a in {1..N}^3, the exact resonance sets
//   S_j^a = { s : m_j = s1 m_{a1} + s2 m_{a2} + s3 m_{a3} }  and its
// complement T_j^a, enumerated over rationals with no tolerance.
class ResonanceTable {
 public:
  static ResonanceTable build(const MassVector& m);

  int n_components() const { return n_; }
  // a is 1-based, j is 1-based.
  bool in_m_set(int j, const std::array<int, 3>& a) const;  // a in M_j
  std::uint8_t resonant_mask(int j, const std::array<int, 3>& a) const;
  std::vector<SignTriple> resonant_signs(int j, const std::array<int, 3>& a) const;
  std::vector<SignTriple> nonresonant_signs(int j, const std::array<int, 3>& a) const;
  std::vector<std::array<int, 3>> m_set(int j) const;  // all a with S_j^a nonempty

 private:
  int n_ = 0;
  std::vector<std::uint8_t> mask_;  // bit b set <=> sign triple b is resonant
  size_t index(int j, const std::array<int, 3>& a) const;
};

}  // namespace kgres
