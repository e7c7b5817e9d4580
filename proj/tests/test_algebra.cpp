#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <random>

#include "kgres/algebra.hpp"

using namespace kgres;

namespace {

MassVector masses(std::initializer_list<Rational> rs) { return MassVector(std::vector<Rational>(rs)); }

}  // namespace

TEST_CASE("rational arithmetic and parsing") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(-3, -6) == Rational(1, 2));
  CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
  CHECK(Rational(1, 2) - Rational(1, 3) == Rational(1, 6));
  CHECK(Rational(2, 3) * Rational(9, 4) == Rational(3, 2));
  CHECK(Rational(1, 2) / Rational(1, 4) == Rational(2));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(Rational::parse("3/2") == Rational(3, 2));
  CHECK(Rational::parse("-7") == Rational(-7));
  CHECK_THROWS_WITH_AS(Rational::parse("1.5"), doctest::Contains("p/q"), std::invalid_argument);
  CHECK_THROWS_AS(Rational::parse("2/0"), std::invalid_argument);
  CHECK_THROWS_AS(Rational::parse("x"), std::invalid_argument);
}

TEST_CASE("rational overflow is detected, not wrapped") {
  const std::int64_t big = INT64_MAX / 2 + 1;
  CHECK_THROWS_AS(Rational(big, 1) + Rational(big, 1), std::overflow_error);
  CHECK_NOTHROW(Rational(big, 2) + Rational(big, 2));
}

TEST_CASE("cubic term construction validation") {
  CHECK_THROWS_AS(CubicNonlinearity(2, {CubicNonlinearity::term(
                         3, 1.0, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}})}),
                  std::invalid_argument);
  CHECK_THROWS_AS(CubicNonlinearity(2, {CubicNonlinearity::term(
                         1, 1.0, {{1, Deriv::None}, {4, Deriv::None}, {1, Deriv::None}})}),
                  std::invalid_argument);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(CubicNonlinearity(1, {CubicNonlinearity::term(
                         1, inf, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}})}),
                  std::invalid_argument);
}

TEST_CASE("mass vector validation") {
  CHECK_THROWS_AS(masses({Rational(0), Rational(1)}), std::invalid_argument);
  CHECK_THROWS_AS(masses({Rational(-1)}), std::invalid_argument);
  CHECK_THROWS_AS(masses({Rational(3), Rational(1)}), std::invalid_argument);
  auto m = masses({Rational(1, 3), Rational(1, 2), Rational(2)});
  CHECK(m.common_denominator() == 6);
  CHECK(m.integer_masses() == std::vector<std::int64_t>{2, 3, 12});
}

TEST_CASE("resonance sets for the two-component cubic pair") {
  auto table = ResonanceTable::build(masses({Rational(1), Rational(3)}));
  // m1 = -m1 - m1 + m2
  auto s1 = table.resonant_signs(1, {1, 1, 2});
  REQUIRE(s1.size() == 1);
  CHECK(s1[0] == SignTriple{-1, -1, 1});
  // m2 = m1 + m1 + m1
  auto s2 = table.resonant_signs(2, {1, 1, 1});
  REQUIRE(s2.size() == 1);
  CHECK(s2[0] == SignTriple{1, 1, 1});
}

TEST_CASE("resonance set for the four-component sum relation") {
  auto table =
      ResonanceTable::build(masses({Rational(1), Rational(2), Rational(3), Rational(6)}));
  auto s = table.resonant_signs(4, {1, 2, 3});
  REQUIRE(s.size() == 1);
  CHECK(s[0] == SignTriple{1, 1, 1});
}

TEST_CASE("parity obstruction yields an empty resonance set") {
  auto table = ResonanceTable::build(masses({Rational(1), Rational(2)}));
  CHECK(table.resonant_signs(1, {2, 2, 2}).empty());
  CHECK(table.nonresonant_signs(1, {2, 2, 2}).size() == 8);
}

TEST_CASE("every (j, a) splits the eight sign triples exactly") {
  auto table =
      ResonanceTable::build(masses({Rational(1, 2), Rational(3, 4), Rational(2), Rational(2)}));
  for (int j = 1; j <= 4; ++j)
    for (int a1 = 1; a1 <= 4; ++a1)
      for (int a2 = 1; a2 <= 4; ++a2)
        for (int a3 = 1; a3 <= 4; ++a3) {
          std::array<int, 3> a{a1, a2, a3};
          CHECK(table.resonant_signs(j, a).size() + table.nonresonant_signs(j, a).size() == 8);
          CHECK(table.in_m_set(j, a) == !table.resonant_signs(j, a).empty());
        }
}

TEST_CASE("resonance table is invariant under common rational rescaling") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> num(1, 8), den(1, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Rational> raw;
    for (int k = 0; k < 3; ++k) raw.emplace_back(num(rng), den(rng));
    std::sort(raw.begin(), raw.end());
    Rational scale(num(rng), den(rng));
    std::vector<Rational> scaled;
    for (const auto& r : raw) scaled.push_back(r * scale);
    auto ta = ResonanceTable::build(MassVector(raw));
    auto tb = ResonanceTable::build(MassVector(scaled));
    for (int j = 1; j <= 3; ++j)
      for (int a1 = 1; a1 <= 3; ++a1)
        for (int a2 = 1; a2 <= 3; ++a2)
          for (int a3 = 1; a3 <= 3; ++a3)
            CHECK(ta.resonant_mask(j, {a1, a2, a3}) == tb.resonant_mask(j, {a1, a2, a3}));
  }
}

TEST_CASE("cubic term canonicalization merges and drops") {
  std::vector<CubicTerm> raw;
  raw.push_back(CubicNonlinearity::term(1, 1.0, {{2, Deriv::None}, {1, Deriv::Dt}, {1, Deriv::None}}));
  raw.push_back(CubicNonlinearity::term(1, 2.5, {{1, Deriv::None}, {1, Deriv::Dt}, {2, Deriv::None}}));
  raw.push_back(CubicNonlinearity::term(2, 4.0, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}}));
  raw.push_back(CubicNonlinearity::term(2, -4.0, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}}));
  CubicNonlinearity F(2, raw);
  REQUIRE(F.terms().size() == 1);
  const auto& t = F.terms()[0];
  CHECK(t.target == 1);
  CHECK(t.coeff == doctest::Approx(3.5));
  CHECK(t.factors[0] == Factor{1, Deriv::None});
  CHECK(t.factors[1] == Factor{1, Deriv::Dt});
  CHECK(t.factors[2] == Factor{2, Deriv::None});

  // re-canonicalizing is the identity
  CubicNonlinearity G(2, F.terms());
  REQUIRE(G.terms().size() == F.terms().size());
  CHECK(G.terms()[0].coeff == F.terms()[0].coeff);
  CHECK(G.terms()[0].factors == F.terms()[0].factors);
}

TEST_CASE("nonlinearity evaluation on the paper systems") {
  SUBCASE("cubic pair") {
    CubicNonlinearity F(2, {CubicNonlinearity::term(1, 1.0, {{1, Deriv::None}, {1, Deriv::None}, {2, Deriv::None}}),
                            CubicNonlinearity::term(2, 1.0, {{1, Deriv::None}, {1, Deriv::None}, {1, Deriv::None}})});
    std::vector<double> u{2, 1}, z{0, 0};
    auto f = eval_nonlinearity(F, u, z, z);
    CHECK(f[0] == doctest::Approx(4.0));
    CHECK(f[1] == doctest::Approx(8.0));
  }
  SUBCASE("derivative coupling") {
    CubicNonlinearity F(2, {CubicNonlinearity::term(1, 1.0, {{1, Deriv::Dt}, {1, Deriv::Dt}, {2, Deriv::Dx}}),
                            CubicNonlinearity::term(2, 1.0, {{2, Deriv::Dt}, {2, Deriv::Dt}, {1, Deriv::Dx}})});
    std::vector<double> u{0, 0}, ut{1, 2}, ux{3, 4};
    auto f = eval_nonlinearity(F, u, ut, ux);
    CHECK(f[0] == doctest::Approx(4.0));
    CHECK(f[1] == doctest::Approx(12.0));
  }
  SUBCASE("zero input") {
    CubicNonlinearity F(1, {CubicNonlinearity::term(1, 2.0, {{1, Deriv::None}, {1, Deriv::Dt}, {1, Deriv::Dx}})});
    std::vector<double> z{0};
    auto f = eval_nonlinearity(F, z, z, z);
    CHECK(f[0] == 0.0);
  }
}

TEST_CASE("cubic homogeneity of the evaluation") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> coeff(-2, 2);
  std::uniform_int_distribution<int> comp(1, 3), dv(0, 2);
  std::vector<CubicTerm> raw;
  for (int i = 0; i < 5; ++i) {
    raw.push_back(CubicNonlinearity::term(comp(rng), coeff(rng),
                                          {{comp(rng), static_cast<Deriv>(dv(rng))},
                                           {comp(rng), static_cast<Deriv>(dv(rng))},
                                           {comp(rng), static_cast<Deriv>(dv(rng))}}));
  }
  CubicNonlinearity F(3, raw);
  std::vector<double> u(3), ut(3), ux(3);
  for (auto* v : {&u, &ut, &ux})
    for (auto& x : *v) x = coeff(rng);
  for (double lambda : {-1.5, 0.5, 2.0}) {
    std::vector<double> su(3), sut(3), sux(3);
    for (int k = 0; k < 3; ++k) {
      su[k] = lambda * u[k];
      sut[k] = lambda * ut[k];
      sux[k] = lambda * ux[k];
    }
    auto f = eval_nonlinearity(F, u, ut, ux);
    auto g = eval_nonlinearity(F, su, sut, sux);
    for (int k = 0; k < 3; ++k)
      CHECK(g[k] == doctest::Approx(lambda * lambda * lambda * f[k]).epsilon(1e-12));
  }
}
