#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kgres {

// Exact rational arithmetic on 64-bit integers (128-bit intermediates).
// Masses are kept exact so that resonance relations of the form
// m_j = s1 m_a1 + s2 m_a2 + s3 m_a3 are decidable equality tests instead
// of tolerance comparisons.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1) { assign(num, den); }

  // Accepts "p", "-p", "p/q". Anything with a '.' or exponent is rejected;
  // callers are told to rationalize (e.g. "1.5" -> "3/2").
  static Rational parse(const std::string& text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  Rational operator-() const { return Rational(-num_, den_); }
  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b);
  friend bool operator<=(const Rational& a, const Rational& b) { return a < b || a == b; }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }

 private:
  void assign(std::int64_t num, std::int64_t den);
  static Rational from128(__int128 num, __int128 den);

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace kgres
