#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

#include "blsos/error.hpp"
#include "blsos/oracle.hpp"

using namespace blsos;
using namespace blsos::oracle;
using exactalg::Rational;
using nlohmann::json;

namespace {

Rational q(long num, long den = 1) { return Rational(num, den); }

datum::BLDatum lw_datum(const std::string& pj) {
  json j;
  j["n"] = 3;
  j["maps"] = {{{0, 1, 0}, {0, 0, 1}},
               {{1, 0, 0}, {0, 0, 1}},
               {{1, 0, 0}, {0, 1, 0}}};
  j["p"] = {pj, pj, pj};
  j["domain"] = {{"box", 2}};
  return datum::validate(j);
}

datum::BLDatum lw_mixed_datum() {
  json j;
  j["n"] = 3;
  j["maps"] = {{{0, 1, 0}, {0, 0, 1}},
               {{1, 0, 0}, {0, 0, 1}},
               {{1, 0, 0}, {0, 1, 0}}};
  j["p"] = {"3/4", "3/4", "1/2"};
  j["domain"] = {{"box", 2}};
  return datum::validate(j);
}

datum::BLDatum holder_datum() {
  json j;
  j["n"] = 1;
  j["maps"] = {{{1}}, {{1}}};
  j["p"] = {"1/2", "1/2"};
  j["domain"] = {{"box", 3}};
  return datum::validate(j);
}

// Two copies of the first coordinate plus the second coordinate; with
// p = (1, 0, 1) the dimension condition holds on the whole plane but
// fails on the y-axis, so only the subspace indicator family violates.
datum::BLDatum line_pair_datum() {
  json j;
  j["n"] = 2;
  j["maps"] = {{{1, 0}}, {{0, 1}}, {{1, 0}}};
  j["p"] = {"1", "0", "1"};
  j["domain"] = {{"box", 2}};
  return datum::validate(j);
}

datum::BLDatum identity_datum() {
  json j;
  j["n"] = 1;
  j["maps"] = {{{1}}};
  j["p"] = {"1"};
  j["domain"] = {{"box", 2}};
  return datum::validate(j);
}

Assignment constant_assignment(const datum::BLDatum& d, const Rational& value) {
  Assignment a;
  a.tables.resize(d.m());
  for (std::size_t j = 0; j < d.m(); ++j) {
    for (const auto& y : d.image_points(j)) a.tables[j][y] = value;
  }
  return a;
}

/// Moment table of the uniform distribution on {0,1}^3, complete for
/// `degree`: each variable is an independent fair coin, so a monomial's
/// expectation is 2^-(number of distinct variables involved).
MomentTable uniform_cube_table(long degree) {
  MomentTable table;
  table.degree = degree;
  const polyring::Var x0 = polyring::aux_var(0, "x");
  const polyring::Var x1 = polyring::aux_var(1, "x");
  const polyring::Var x2 = polyring::aux_var(2, "x");
  for (long e0 = 0; e0 <= degree; ++e0) {
    for (long e1 = 0; e0 + e1 <= degree; ++e1) {
      for (long e2 = 0; e0 + e1 + e2 <= degree; ++e2) {
        polyring::Monomial m;
        if (e0 > 0) m = m.times(polyring::Monomial::variable(x0, e0));
        if (e1 > 0) m = m.times(polyring::Monomial::variable(x1, e1));
        if (e2 > 0) m = m.times(polyring::Monomial::variable(x2, e2));
        const int distinct = (e0 > 0) + (e1 > 0) + (e2 > 0);
        table.values[monomial_key(m)] = Rational(1, 1L << distinct);
      }
    }
  }
  return table;
}

/// Moment table of a finite distribution: support points with weights,
/// variables a0.x ... a{k-1}.x, complete for `degree`.
MomentTable distribution_table(const std::vector<std::vector<long>>& support,
                               const std::vector<Rational>& weights,
                               long degree) {
  MomentTable table;
  table.degree = degree;
  const std::size_t k = support.front().size();
  std::vector<long> exps(k, 0);
  const std::function<void(std::size_t, long)> rec = [&](std::size_t idx,
                                                         long remaining) {
    if (idx == k) {
      polyring::Monomial m;
      for (std::size_t v = 0; v < k; ++v) {
        if (exps[v] > 0) {
          m = m.times(polyring::Monomial::variable(
              polyring::aux_var(static_cast<int>(v), "x"),
              static_cast<unsigned>(exps[v])));
        }
      }
      Rational value(0);
      for (std::size_t s = 0; s < support.size(); ++s) {
        Rational term = weights[s];
        for (std::size_t v = 0; v < k; ++v) {
          for (long e = 0; e < exps[v]; ++e) term *= Rational(support[s][v]);
        }
        value += term;
      }
      table.values[monomial_key(m)] = value;
      return;
    }
    for (long e = 0; e <= remaining; ++e) {
      exps[idx] = e;
      rec(idx + 1, remaining - e);
    }
    exps[idx] = 0;
  };
  rec(0, degree);
  return table;
}

}  // namespace

TEST_CASE("value power is the lcm of the positive exponent numerators") {
  CHECK(value_power(lw_datum("1/2")) == 1);
  CHECK(value_power(lw_mixed_datum()) == 6);  // s_list = (3, 3, 2)
  CHECK(value_power(line_pair_datum()) == 1);
}

TEST_CASE("constant functions give equality on the triple projection") {
  const auto d = lw_datum("1/2");
  // LHS = 8 and RHS = 4^(3/2) = 8: squared comparison 64 = 64.
  CHECK(inequality_gap(d, constant_assignment(d, q(1))) == q(0));
  // Scaling both sides preserves equality.
  CHECK(inequality_gap(d, constant_assignment(d, q(9))) == q(0));
}

TEST_CASE("proportional functions give equality in the two-map instance") {
  const auto d = holder_datum();
  Assignment a;
  a.tables.resize(2);
  for (long y = 0; y < 3; ++y) {
    const Rational v = q((y + 1) * (y + 1));
    a.tables[0][{y}] = v;
    a.tables[1][{y}] = v;
  }
  CHECK(inequality_gap(d, a) == q(0));

  // Disjointly supported functions leave slack.
  Assignment b;
  b.tables.resize(2);
  b.tables[0] = {{{0}, q(1)}, {{1}, q(0)}, {{2}, q(0)}};
  b.tables[1] = {{{0}, q(0)}, {{1}, q(1)}, {{2}, q(0)}};
  CHECK(inequality_gap(d, b) == q(1));
}

TEST_CASE("gap evaluation validates its assignment") {
  const auto d = lw_datum("1/2");
  Assignment missing = constant_assignment(d, q(1));
  missing.tables[1].erase({0, 0});
  CHECK_THROWS_WITH_AS(inequality_gap(d, missing),
                       "assignment is missing map 2 at (0,0)", DomainError);

  Assignment negative = constant_assignment(d, q(1));
  negative.tables[0][{0, 0}] = q(-1);
  CHECK_THROWS_AS(inequality_gap(d, negative), DomainError);

  Assignment wrong_tables;
  wrong_tables.tables.resize(2);
  CHECK_THROWS_AS(inequality_gap(d, wrong_tables), DomainError);

  // Mixed exponents need perfect sixth powers.
  const auto mixed = lw_mixed_datum();
  CHECK_THROWS_WITH_AS(inequality_gap(mixed, constant_assignment(mixed, q(2))),
                       "assignment value 2 is not an exact 6-th power",
                       DomainError);
  CHECK(inequality_gap(mixed, constant_assignment(mixed, q(64))) >= q(0));
}

TEST_CASE("random checks never violate the feasible triple projection") {
  const auto d = lw_datum("1/2");
  const auto report = random_check(d, 10000, 2026);
  CHECK(report.trials == 10000);
  CHECK(report.violations == 0);
  CHECK(report.min_gap >= q(0));
}

TEST_CASE("random checks are deterministic for a fixed seed") {
  const auto d = lw_datum("1/2");
  const auto a = random_check(d, 100, 42);
  const auto b = random_check(d, 100, 42);
  CHECK(a.trials == b.trials);
  CHECK(a.violations == b.violations);
  CHECK(a.min_gap == b.min_gap);
}

TEST_CASE("random checks flag the quarter-exponent instance") {
  const auto d = lw_datum("1/4");
  const auto report = random_check(d, 200, 7);
  CHECK(report.violations > 0);
  CHECK(report.min_gap < q(0));
}

TEST_CASE("violation search finds the box counterexample at quarter exponents") {
  const auto d = lw_datum("1/4");
  const auto hit = find_violation(d);
  REQUIRE(hit.has_value());
  // The indicator of the whole side-2 box: LHS^4 = 8^4 = 4096 versus
  // RHS^4 = 4^3 = 64.
  for (std::size_t j = 0; j < 3; ++j) {
    REQUIRE(hit->tables[j].size() == 4);
    for (const auto& [y, value] : hit->tables[j]) CHECK(value == q(1));
  }
  CHECK(inequality_gap(d, *hit) == q(64 - 4096));
}

TEST_CASE("violation search falls through to the subspace indicator family") {
  const auto d = line_pair_datum();
  // The full box is tight (4 = 2 * 1 * 2), so the sub-box family never
  // strictly violates; the y-axis indicator does.
  const auto hit = find_violation(d);
  REQUIRE(hit.has_value());
  CHECK(inequality_gap(d, *hit) < q(0));

  const std::map<std::vector<long>, Rational> axis = {{{0}, q(1)}, {{1}, q(0)}};
  const std::map<std::vector<long>, Rational> ones = {{{0}, q(1)}, {{1}, q(1)}};
  CHECK(hit->tables[0] == axis);
  CHECK(hit->tables[1] == ones);
  CHECK(hit->tables[2] == axis);
  CHECK(inequality_gap(d, *hit) == q(-1));
}

TEST_CASE("violation search respects feasible instances") {
  CHECK_FALSE(find_violation(lw_datum("1/2")).has_value());
  CHECK_FALSE(find_violation(identity_datum()).has_value());
  CHECK_FALSE(find_violation(lw_mixed_datum()).has_value());
}

TEST_CASE("monomial keys are canonical and parse back") {
  const polyring::Var x0 = polyring::aux_var(0, "x");
  const polyring::Var x1 = polyring::aux_var(1, "x");
  polyring::Monomial m = polyring::Monomial::variable(x1, 1);
  m = m.times(polyring::Monomial::variable(x0, 2));
  CHECK(monomial_key(m) == "a0.x^2 a1.x");
  CHECK(monomial_key(polyring::Monomial{}) == "1");

  CHECK(monomial_key(monomial_from_key("a1.x a0.x^2")) == "a0.x^2 a1.x");
  CHECK(monomial_key(monomial_from_key("a0.x a0.x")) == "a0.x^2");
  CHECK(monomial_from_key("1").factors().empty());

  CHECK_THROWS_AS(monomial_from_key(""), ParseError);
  CHECK_THROWS_AS(monomial_from_key("a0.x^0"), ParseError);
  CHECK_THROWS_AS(monomial_from_key("a0.x^"), ParseError);
  CHECK_THROWS_AS(monomial_from_key("a0.x  a1.x"), ParseError);
}

TEST_CASE("the moment basis is graded and starts at the unit monomial") {
  const MomentTable table = uniform_cube_table(4);
  const auto basis = moment_basis(table, 2);
  REQUIRE(basis.size() == 10);
  CHECK(monomial_key(basis[0]) == "1");
  CHECK(monomial_key(basis[1]) == "a0.x");
  CHECK(monomial_key(basis[2]) == "a1.x");
  CHECK(monomial_key(basis[3]) == "a2.x");
  CHECK(basis[4].total_degree() == 2);
  CHECK(basis.back().total_degree() == 2);
}

TEST_CASE("the uniform cube moment table passes all degrees up to six") {
  const MomentTable table = uniform_cube_table(6);
  for (long d = 0; d <= 6; ++d) {
    const auto outcome = check_pseudo_expectation(table, d);
    CHECK_MESSAGE(outcome.pass, "failed at degree ", d, " on axiom ",
                  outcome.axiom);
  }
}

TEST_CASE("normalization failures are reported before positivity") {
  MomentTable table;
  table.degree = 0;
  table.values["1"] = q(2);
  const auto outcome = check_pseudo_expectation(table, 0);
  CHECK_FALSE(outcome.pass);
  CHECK(outcome.axiom == "normalization");
}

TEST_CASE("the indefinite two-by-two moment matrix fails with pivot -3") {
  MomentTable table;
  table.degree = 2;
  table.values["1"] = q(1);
  table.values["a0.x"] = q(2);
  table.values["a0.x^2"] = q(1);
  const auto outcome = check_pseudo_expectation(table, 2);
  CHECK_FALSE(outcome.pass);
  CHECK(outcome.axiom == "positivity");
  CHECK(outcome.pivot == q(-3));
  CHECK(outcome.pivot_index == 2);
  CHECK(outcome.witness == std::vector<Rational>{q(2), q(-1)});
}

TEST_CASE("a zero diagonal with coupled variables is caught as indefinite") {
  MomentTable table;
  table.degree = 2;
  table.values["1"] = q(1);
  table.values["a0.x"] = q(0);
  table.values["a1.x"] = q(0);
  table.values["a0.x^2"] = q(0);
  table.values["a0.x a1.x"] = q(1);
  table.values["a1.x^2"] = q(0);
  const auto outcome = check_pseudo_expectation(table, 2);
  CHECK_FALSE(outcome.pass);
  CHECK(outcome.axiom == "positivity");
  CHECK(outcome.pivot == q(-2));
  CHECK(outcome.pivot_index == 2);
  CHECK(outcome.witness == std::vector<Rational>{q(0), q(1), q(-1)});
}

TEST_CASE("incomplete tables name the missing monomial") {
  MomentTable table;
  table.degree = 2;
  table.values["1"] = q(1);
  table.values["a0.x"] = q(2);
  CHECK_THROWS_WITH_AS(check_pseudo_expectation(table, 2),
                       "moment table is missing monomial a0.x^2", DomainError);

  MomentTable duplicated;
  duplicated.values["a0.x a1.x"] = q(1);
  duplicated.values["a1.x a0.x"] = q(1);
  CHECK_THROWS_WITH_AS(check_pseudo_expectation(duplicated, 0),
                       "moment table repeats monomial a0.x a1.x", DomainError);
}

TEST_CASE("genuine finite distributions pass every degree up to six") {
  const std::vector<std::vector<std::vector<long>>> supports = {
      {{0, 0}, {1, 2}, {2, 1}},
      {{-1, 3}, {2, -2}, {0, 0}, {1, 1}},
      {{5, 0}, {0, 5}},
  };
  const std::vector<std::vector<Rational>> weight_sets = {
      {q(1, 2), q(1, 3), q(1, 6)},
      {q(1, 4), q(1, 4), q(1, 4), q(1, 4)},
      {q(2, 3), q(1, 3)},
  };
  for (std::size_t i = 0; i < supports.size(); ++i) {
    const MomentTable table = distribution_table(supports[i], weight_sets[i], 6);
    for (long d = 0; d <= 6; ++d) {
      const auto outcome = check_pseudo_expectation(table, d);
      CHECK_MESSAGE(outcome.pass, "distribution ", i, " failed at degree ", d);
    }
  }
}
