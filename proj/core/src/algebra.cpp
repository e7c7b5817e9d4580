#include "kgres/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace kgres {

namespace {

std::int64_t checked_cast(__int128 v) {
  if (v > INT64_MAX || v < INT64_MIN) throw std::overflow_error("rational overflow");
  return static_cast<std::int64_t>(v);
}

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace

void Rational::assign(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  __int128 n = num, d = den;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  __int128 g = gcd128(n, d);
  if (g == 0) g = 1;
  num_ = checked_cast(n / g);
  den_ = checked_cast(d / g);
}

Rational Rational::from128(__int128 num, __int128 den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 g = gcd128(num, den);
  if (g == 0) g = 1;
  Rational r;
  r.num_ = checked_cast(num / g);
  r.den_ = checked_cast(den / g);
  return r;
}

Rational Rational::parse(const std::string& text) {
  if (text.find_first_of(".eE") != std::string::npos)
    throw std::invalid_argument("'" + text +
                                "' is not an exact rational; write it as \"p/q\" (e.g. 1.5 -> \"3/2\")");
  auto slash = text.find('/');
  try {
    size_t used = 0;
    if (slash == std::string::npos) {
      std::int64_t p = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument("");
      return Rational(p);
    }
    std::int64_t p = std::stoll(text.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument("");
    std::int64_t q = std::stoll(text.substr(slash + 1), &used);
    if (used != text.size() - slash - 1) throw std::invalid_argument("");
    return Rational(p, q);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("'" + text + "' is not a rational of the form \"p/q\"");
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("'" + text + "' exceeds the 64-bit rational range");
  }
}

std::string Rational::str() const {
  std::ostringstream os;
  os << num_;
  if (den_ != 1) os << '/' << den_;
  return os.str();
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational::from128(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                           static_cast<__int128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return Rational::from128(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                           static_cast<__int128>(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return Rational::from128(static_cast<__int128>(a.num_) * b.num_,
                           static_cast<__int128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::invalid_argument("rational division by zero");
  return Rational::from128(static_cast<__int128>(a.num_) * b.den_,
                           static_cast<__int128>(a.den_) * b.num_);
}

bool operator<(const Rational& a, const Rational& b) {
  return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
}

MassVector::MassVector(std::vector<Rational> masses) : m_(std::move(masses)) {
  if (m_.empty()) throw std::invalid_argument("mass vector must have at least one component");
  for (size_t j = 0; j < m_.size(); ++j) {
    if (!(Rational(0) < m_[j]))
      throw std::invalid_argument("mass " + std::to_string(j + 1) + " must be strictly positive");
  }
  for (size_t j = 1; j < m_.size(); ++j) {
    if (m_[j] < m_[j - 1])
      throw std::invalid_argument(
          "masses must be listed in non-decreasing order; reorder the components accordingly");
  }
}

std::vector<double> MassVector::as_doubles() const {
  std::vector<double> out(m_.size());
  for (size_t j = 0; j < m_.size(); ++j) out[j] = m_[j].value();
  return out;
}

std::int64_t MassVector::common_denominator() const {
  std::int64_t q = 1;
  for (const auto& r : m_) {
    __int128 g = std::gcd(q, r.den());
    __int128 l = static_cast<__int128>(q) / g * r.den();
    if (l > INT64_MAX) throw std::overflow_error("mass common denominator overflow");
    q = static_cast<std::int64_t>(l);
  }
  return q;
}

std::vector<std::int64_t> MassVector::integer_masses() const {
  const std::int64_t q = common_denominator();
  std::vector<std::int64_t> out(m_.size());
  for (size_t j = 0; j < m_.size(); ++j) out[j] = m_[j].num() * (q / m_[j].den());
  return out;
}

namespace {

bool factor_less(const Factor& a, const Factor& b) {
  return std::tuple(a.component, static_cast<int>(a.deriv)) <
         std::tuple(b.component, static_cast<int>(b.deriv));
}

bool term_key_less(const CubicTerm& a, const CubicTerm& b) {
  auto key = [](const CubicTerm& t) {
    return std::tuple(t.target, t.factors[0].component, static_cast<int>(t.factors[0].deriv),
                      t.factors[1].component, static_cast<int>(t.factors[1].deriv),
                      t.factors[2].component, static_cast<int>(t.factors[2].deriv));
  };
  return key(a) < key(b);
}

bool term_key_equal(const CubicTerm& a, const CubicTerm& b) {
  return !term_key_less(a, b) && !term_key_less(b, a);
}

}  // namespace

CubicNonlinearity::CubicNonlinearity(int n_components, std::vector<CubicTerm> terms)
    : n_(n_components) {
  if (n_ < 1) throw std::invalid_argument("nonlinearity needs at least one component");
  for (auto& t : terms) {
    if (t.target < 1 || t.target > n_)
      throw std::invalid_argument("cubic term target index out of range");
    for (auto& f : t.factors) {
      if (f.component < 1 || f.component > n_)
        throw std::invalid_argument("cubic term factor index out of range");
    }
    if (!std::isfinite(t.coeff))
      throw std::invalid_argument("cubic term coefficient must be finite");
    std::sort(t.factors.begin(), t.factors.end(), factor_less);
  }
  std::sort(terms.begin(), terms.end(), term_key_less);
  for (const auto& t : terms) {
    if (!terms_.empty() && term_key_equal(terms_.back(), t)) {
      terms_.back().coeff += t.coeff;
      if (terms_.back().coeff == 0.0) terms_.pop_back();
    } else if (t.coeff != 0.0) {
      terms_.push_back(t);
    }
  }
}

CubicTerm CubicNonlinearity::term(int target, double coeff,
                                  std::initializer_list<std::pair<int, Deriv>> factors) {
  if (factors.size() != 3) throw std::invalid_argument("a cubic term needs exactly 3 factors");
  CubicTerm t;
  t.target = target;
  t.coeff = coeff;
  int i = 0;
  for (const auto& [c, d] : factors) t.factors[static_cast<size_t>(i++)] = Factor{c, d};
  return t;
}

std::vector<double> eval_nonlinearity(const CubicNonlinearity& F,
                                      std::span<const double> u,
                                      std::span<const double> ut,
                                      std::span<const double> ux) {
  const int n = F.n_components();
  if (static_cast<int>(u.size()) != n || static_cast<int>(ut.size()) != n ||
      static_cast<int>(ux.size()) != n)
    throw std::invalid_argument("eval_nonlinearity: input size mismatch");
  std::vector<double> out(static_cast<size_t>(n), 0.0);
  for (const auto& t : F.terms()) {
    double prod = t.coeff;
    for (const auto& f : t.factors) {
      const size_t c = static_cast<size_t>(f.component - 1);
      switch (f.deriv) {
        case Deriv::None: prod *= u[c]; break;
        case Deriv::Dt: prod *= ut[c]; break;
        case Deriv::Dx: prod *= ux[c]; break;
      }
    }
    out[static_cast<size_t>(t.target - 1)] += prod;
  }
  return out;
}

std::array<SignTriple, 8> all_sign_triples() {
  std::array<SignTriple, 8> out{};
  for (int b = 0; b < 8; ++b) {
    out[static_cast<size_t>(b)] = {(b & 1) ? -1 : 1, (b & 2) ? -1 : 1, (b & 4) ? -1 : 1};
  }
  return out;
}

size_t ResonanceTable::index(int j, const std::array<int, 3>& a) const {
  const size_t n = static_cast<size_t>(n_);
  for (int v : a) {
    if (v < 1 || v > n_) throw std::out_of_range("resonance table index out of range");
  }
  if (j < 1 || j > n_) throw std::out_of_range("resonance table target out of range");
  return ((static_cast<size_t>(j - 1) * n + static_cast<size_t>(a[0] - 1)) * n +
          static_cast<size_t>(a[1] - 1)) *
             n +
         static_cast<size_t>(a[2] - 1);
}

ResonanceTable ResonanceTable::build(const MassVector& m) {
  ResonanceTable table;
  const int n = m.size();
  table.n_ = n;
  table.mask_.assign(static_cast<size_t>(n) * n * n * n, 0);
  const auto triples = all_sign_triples();
  for (int j = 1; j <= n; ++j) {
    for (int a1 = 1; a1 <= n; ++a1)
      for (int a2 = 1; a2 <= n; ++a2)
        for (int a3 = 1; a3 <= n; ++a3) {
          std::uint8_t mask = 0;
          for (int b = 0; b < 8; ++b) {
            const auto& s = triples[static_cast<size_t>(b)];
            Rational sum = (s[0] > 0 ? m[a1 - 1] : -m[a1 - 1]) +
                           (s[1] > 0 ? m[a2 - 1] : -m[a2 - 1]) +
                           (s[2] > 0 ? m[a3 - 1] : -m[a3 - 1]);
            if (sum == m[j - 1]) mask |= static_cast<std::uint8_t>(1u << b);
          }
          table.mask_[table.index(j, {a1, a2, a3})] = mask;
        }
  }
  return table;
}

bool ResonanceTable::in_m_set(int j, const std::array<int, 3>& a) const {
  return mask_[index(j, a)] != 0;
}

std::uint8_t ResonanceTable::resonant_mask(int j, const std::array<int, 3>& a) const {
  return mask_[index(j, a)];
}

std::vector<SignTriple> ResonanceTable::resonant_signs(int j, const std::array<int, 3>& a) const {
  std::vector<SignTriple> out;
  const std::uint8_t mask = mask_[index(j, a)];
  const auto triples = all_sign_triples();
  for (int b = 0; b < 8; ++b)
    if (mask & (1u << b)) out.push_back(triples[static_cast<size_t>(b)]);
  return out;
}

std::vector<SignTriple> ResonanceTable::nonresonant_signs(int j, const std::array<int, 3>& a) const {
  std::vector<SignTriple> out;
  const std::uint8_t mask = mask_[index(j, a)];
  const auto triples = all_sign_triples();
  for (int b = 0; b < 8; ++b)
    if (!(mask & (1u << b))) out.push_back(triples[static_cast<size_t>(b)]);
  return out;
}

std::vector<std::array<int, 3>> ResonanceTable::m_set(int j) const {
  std::vector<std::array<int, 3>> out;
  for (int a1 = 1; a1 <= n_; ++a1)
    for (int a2 = 1; a2 <= n_; ++a2)
      for (int a3 = 1; a3 <= n_; ++a3)
        if (in_m_set(j, {a1, a2, a3})) out.push_back({a1, a2, a3});
  return out;
}

}  // namespace kgres
