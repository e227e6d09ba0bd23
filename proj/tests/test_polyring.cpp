#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "blsos/polyring.hpp"

using namespace blsos;
using namespace blsos::polyring;

namespace {

Polynomial pv(Var v) { return Polynomial::variable(v); }

Polynomial random_poly(std::mt19937_64& rng, const std::vector<Var>& vars,
                       int max_terms, unsigned max_exp, bool positive_only) {
  std::uniform_int_distribution<int> coeff(positive_only ? 1 : -4, 4);
  std::uniform_int_distribution<unsigned> expd(0, max_exp);
  std::uniform_int_distribution<int> terms(1, max_terms);
  Polynomial p;
  const int k = terms(rng);
  for (int t = 0; t < k; ++t) {
    Monomial m;
    for (Var v : vars) {
      const unsigned e = expd(rng);
      if (e > 0) m = m.times(Monomial::variable(v, e));
    }
    int c = coeff(rng);
    if (c == 0) c = 1;
    p.add_term(m, Rational(c));
  }
  return p;
}

}  // namespace

TEST_CASE("variable interning is canonical") {
  const Var a = func_root(1, {0, 1});
  const Var b = func_root(1, {0, 1});
  const Var c = func_root(1, {1, 0});
  CHECK(a == b);
  CHECK(a.raw() == b.raw());
  CHECK(!(a == c));
  CHECK(a.id().point == std::vector<long>{0, 1});
}

TEST_CASE("variable names round trip") {
  const Var f = func_root(2, {0, -1, 3});
  const Var h = aux_var(1, "h", {4});
  const Var xi = aux_var(0, "xi");
  const Var t = slack_var(3);
  const Var tu = slack_var(0, "u");
  for (Var v : {f, h, xi, t, tu}) {
    CHECK(var_from_string(var_to_string(v)) == v);
  }
  CHECK(var_to_string(f) == "F2(0,-1,3)");
  CHECK(var_to_string(h) == "a1.h(4)");
  CHECK(var_to_string(xi) == "a0.xi");
  CHECK(var_to_string(t) == "t3");
  CHECK(var_to_string(tu) == "t0.u");
  CHECK_THROWS_AS(var_from_string("q7"), ParseError);
  CHECK_THROWS_AS(var_from_string("F1(0) "), ParseError);
}

TEST_CASE("product of sum and difference") {
  const Var x = aux_var(0, "x");
  const Var y = aux_var(0, "y");
  const Polynomial lhs = (pv(x) + pv(y)) * (pv(x) - pv(y));
  const Polynomial rhs = pv(x) * pv(x) - pv(y) * pv(y);
  CHECK(lhs == rhs);
}

TEST_CASE("square of a difference") {
  const Var x = aux_var(0, "x");
  const Var y = aux_var(0, "y");
  const Polynomial sq = (pv(x) - pv(y)).pow(2);
  Polynomial expect;
  expect.add_term(Monomial::variable(x, 2), Rational(1));
  expect.add_term(Monomial::variable(x).times(Monomial::variable(y)),
                  Rational(-2));
  expect.add_term(Monomial::variable(y, 2), Rational(1));
  CHECK(sq == expect);

  SosExpr sos;
  sos.add(Rational(1), pv(x) - pv(y));
  CHECK(sos.expand() == expect);
}

TEST_CASE("total degree conventions") {
  const Var x = aux_var(0, "x");
  const Var y = aux_var(0, "y");
  Polynomial p = pv(x).pow(2) * pv(y) + pv(x);
  CHECK(p.total_degree() == 3);
  CHECK(Polynomial(Rational(5)).total_degree() == 0);
  CHECK(Polynomial{}.total_degree() == 0);
}

TEST_CASE("degree additivity for products without top cancellation") {
  std::mt19937_64 rng(314159);
  const std::vector<Var> vars = {aux_var(0, "x"), aux_var(0, "y"),
                                 aux_var(0, "z")};
  for (int trial = 0; trial < 100; ++trial) {
    const Polynomial a = random_poly(rng, vars, 5, 3, /*positive_only=*/true);
    const Polynomial b = random_poly(rng, vars, 5, 4, /*positive_only=*/true);
    REQUIRE((a * b).total_degree() == a.total_degree() + b.total_degree());
  }
}

TEST_CASE("ring laws on random triples") {
  std::mt19937_64 rng(2718281);
  const std::vector<Var> vars = {aux_var(0, "x"), aux_var(0, "y"),
                                 aux_var(0, "z")};
  for (int trial = 0; trial < 500; ++trial) {
    const Polynomial a = random_poly(rng, vars, 4, 3, false);
    const Polynomial b = random_poly(rng, vars, 4, 3, false);
    const Polynomial c = random_poly(rng, vars, 4, 3, false);
    REQUIRE((a + b) + c == a + (b + c));
    REQUIRE(a + b == b + a);
    REQUIRE(a * b == b * a);
    REQUIRE((a * b) * c == a * (b * c));
    REQUIRE(a * (b + c) == a * b + a * c);
    REQUIRE((a - b) + b == a);
  }
}

TEST_CASE("degree accumulation rules") {
  std::mt19937_64 rng(99);
  const std::vector<Var> vars = {aux_var(0, "x"), aux_var(0, "y")};
  for (int trial = 0; trial < 100; ++trial) {
    const Polynomial a = random_poly(rng, vars, 4, 3, false);
    const Polynomial b = random_poly(rng, vars, 4, 3, false);
    REQUIRE((a + b).total_degree() <=
            std::max(a.total_degree(), b.total_degree()));
    if (!a.is_zero()) {
      REQUIRE((a * a).total_degree() == 2 * a.total_degree());
    }
  }
}

TEST_CASE("sum of squares expansion is nonnegative at random points") {
  std::mt19937_64 rng(55555);
  const std::vector<Var> vars = {aux_var(0, "x"), aux_var(0, "y"),
                                 aux_var(0, "z")};
  std::uniform_int_distribution<int> num(-9, 9);
  std::uniform_int_distribution<int> den(1, 7);
  for (int trial = 0; trial < 50; ++trial) {
    SosExpr sos;
    const int squares = 1 + trial % 3;
    for (int i = 0; i < squares; ++i) {
      sos.add(Rational(1 + trial % 5),
              random_poly(rng, vars, 4, 2, false));
    }
    Assignment point;
    for (Var v : vars) {
      point.emplace(v, Rational(num(rng), den(rng)));
    }
    REQUIRE(sos.expand().evaluate(point) >= 0);
  }
}

TEST_CASE("sum of squares weights must be positive") {
  SosExpr sos;
  CHECK_THROWS_AS(sos.add(Rational(-1), Polynomial(Rational(1))), DomainError);
  CHECK_THROWS_AS(sos.add(Rational(0), Polynomial(Rational(1))), DomainError);
}

TEST_CASE("evaluation requires a complete assignment") {
  const Var x = aux_var(0, "x");
  const Polynomial p = pv(x).pow(3);
  Assignment values;
  CHECK_THROWS_AS(p.evaluate(values), DomainError);
  values.emplace(x, Rational(-2));
  CHECK(p.evaluate(values) == Rational(-8));
}

TEST_CASE("substitution replaces variables by polynomials") {
  const Var x = aux_var(0, "x");
  const Var u = aux_var(0, "u");
  const Var w = aux_var(0, "w");
  SubstitutionTable table;
  table.emplace(x, pv(u) + pv(w));
  const Polynomial p = pv(x).pow(2) + Polynomial(Rational(3)) * pv(x);
  const Polynomial q = p.substitute(table);
  const Polynomial expect =
      (pv(u) + pv(w)).pow(2) + Polynomial(Rational(3)) * (pv(u) + pv(w));
  CHECK(q == expect);

  // Untouched variables stay.
  SubstitutionTable empty;
  CHECK(p.substitute(empty) == p);
}

TEST_CASE("visible nonnegativity") {
  const Var x = aux_var(0, "x");
  const Var y = aux_var(0, "y");
  Polynomial p = pv(x).pow(2) * pv(y).pow(4) + Polynomial(Rational(2));
  CHECK(p.visibly_nonneg());
  CHECK(Polynomial{}.visibly_nonneg());
  Polynomial odd = pv(x).pow(2) * pv(y);
  CHECK(!odd.visibly_nonneg());
  Polynomial negc = Polynomial(Rational(-1)) * pv(x).pow(2);
  CHECK(!negc.visibly_nonneg());
}

TEST_CASE("canonical serialization round trips") {
  const Var f0 = func_root(1, {0});
  const Var f1 = func_root(1, {1});
  const Polynomial sq = (pv(f0) - pv(f1)).pow(2);
  CHECK(sq.str() == "1/1 F1(0)^2 + -2/1 F1(0) F1(1) + 1/1 F1(1)^2");
  CHECK(Polynomial::parse(sq.str()) == sq);
  CHECK(Polynomial{}.str() == "0");
  CHECK(Polynomial::parse("0") == Polynomial{});

  std::mt19937_64 rng(123321);
  const std::vector<Var> vars = {f0, f1, aux_var(2, "h", {1, 1}),
                                 slack_var(3)};
  for (int trial = 0; trial < 100; ++trial) {
    const Polynomial p = random_poly(rng, vars, 6, 4, false);
    const std::string text = p.str();
    REQUIRE(Polynomial::parse(text) == p);
    REQUIRE(Polynomial::parse(text).str() == text);
  }
}

TEST_CASE("parser rejects malformed text") {
  CHECK_THROWS_AS(Polynomial::parse(""), ParseError);
  CHECK_THROWS_AS(Polynomial::parse("1/1 +"), ParseError);
  CHECK_THROWS_AS(Polynomial::parse("x"), ParseError);
  CHECK_THROWS_AS(Polynomial::parse("1/1 F1(0)^0"), ParseError);
  CHECK_THROWS_AS(Polynomial::parse("1/1 F1(0) - 1/1"), ParseError);
}

TEST_CASE("graded lex order sorts by degree then variable order") {
  const Var x = func_root(1, {0});  // earlier in canonical order
  const Var y = func_root(1, {1});
  const Monomial x2 = Monomial::variable(x, 2);
  const Monomial xy = Monomial::variable(x).times(Monomial::variable(y));
  const Monomial y2 = Monomial::variable(y, 2);
  const Monomial x1 = Monomial::variable(x);
  CHECK(Monomial::graded_lex_less(x1, y2));       // lower degree first
  CHECK(Monomial::graded_lex_less(xy, x2));       // x² above xy
  CHECK(Monomial::graded_lex_less(y2, xy));       // xy above y²
  CHECK(!Monomial::graded_lex_less(x2, x2));
}
