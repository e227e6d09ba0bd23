#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <random>

#include "blsos/polytope.hpp"

using namespace blsos;
using namespace blsos::polytope;
using exactalg::Rational;
using exactalg::Vec;
using nlohmann::json;

namespace {

Vec qv(const std::vector<Rational>& entries) { return entries; }

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

bool has_row(const ConstraintSystem& system, const Vec& coeffs,
             const Rational& bound) {
  return std::any_of(system.rows.begin(), system.rows.end(),
                     [&](const Constraint& row) {
                       return row.coeffs == coeffs && row.bound == bound;
                     });
}

std::vector<Vec> vertex_points(const std::vector<Vertex>& vertices) {
  std::vector<Vec> out;
  for (const auto& v : vertices) out.push_back(v.p);
  return out;
}

}  // namespace

TEST_CASE("constraint systems for the triple projection datum") {
  const auto d = lw_datum("1/2");
  const auto fam = datum::subspace_candidates(d, 3);
  const Systems systems = build_systems(d, fam);

  CHECK(has_row(systems.qv, qv({q(0), q(-1), q(-1)}), q(-1)));
  CHECK(has_row(systems.qv, qv({q(-1), q(0), q(-1)}), q(-1)));
  CHECK(has_row(systems.qv, qv({q(-1), q(-1), q(0)}), q(-1)));
  CHECK(has_row(systems.qv, qv({q(-2), q(-2), q(-2)}), q(-3)));
  CHECK(has_row(systems.qv, qv({q(1), q(0), q(0)}), q(1)));
  CHECK(has_row(systems.qv, qv({q(-1), q(0), q(0)}), q(0)));

  // Simplex: nonnegativity plus the two-sided sum row.
  CHECK(systems.pv.rows.size() == 5);
  CHECK(has_row(systems.pv, qv({q(1), q(1), q(1)}), q(1)));
  CHECK(has_row(systems.pv, qv({q(-1), q(-1), q(-1)}), q(-1)));
}

TEST_CASE("vertices of the triple projection polytope") {
  const auto d = lw_datum("1/2");
  const auto fam = datum::subspace_candidates(d, 3);
  const Systems systems = build_systems(d, fam);
  const auto vertices = enumerate_vertices(systems.qv);

  const std::vector<Vec> expect = {
      qv({q(0), q(1), q(1)}), qv({q(1, 2), q(1, 2), q(1, 2)}),
      qv({q(1), q(0), q(1)}), qv({q(1), q(1), q(0)}),
      qv({q(1), q(1), q(1)})};
  CHECK(vertex_points(vertices) == expect);

  for (const auto& v : vertices) {
    CHECK(v.active.size() >= 3);
    // Hadamard audit: denominators within ceil(n^m m^{m/2}).
    for (const auto& c : v.p) {
      CHECK(c.get_den() <= 141);
    }
  }
}

TEST_CASE("one-map polytope collapses to a point") {
  json j;
  j["n"] = 2;
  j["maps"] = {{{1, 0}, {0, 1}}};
  j["p"] = {"1"};
  j["domain"] = {{"box", 2}};
  const auto d = datum::validate(j);
  const Systems systems = build_systems(d, datum::subspace_candidates(d, 3));
  const auto vertices = enumerate_vertices(systems.qv);
  REQUIRE(vertices.size() == 1);
  CHECK(vertices[0].p == qv({q(1)}));
}

TEST_CASE("simplex vertices are the unit vectors") {
  const auto d = lw_datum("1/2");
  const Systems systems = build_systems(d, datum::subspace_candidates(d, 3));
  const auto vertices = enumerate_vertices(systems.pv);
  const std::vector<Vec> expect = {qv({q(0), q(0), q(1)}),
                                   qv({q(0), q(1), q(0)}),
                                   qv({q(1), q(0), q(0)})};
  CHECK(vertex_points(vertices) == expect);
}

TEST_CASE("duplicate tight rows merge into one vertex") {
  ConstraintSystem system;
  system.dim = 1;
  Constraint r1{qv({q(1)}), q(1), Constraint::Tag::BoxUpper, 0, std::nullopt};
  Constraint r2 = r1;
  Constraint r3{qv({q(-1)}), q(0), Constraint::Tag::BoxLower, 0, std::nullopt};
  system.rows = {r1, r2, r3};
  const auto vertices = enumerate_vertices(system);
  CHECK(vertex_points(vertices) == std::vector<Vec>{qv({q(0)}), qv({q(1)})});
}

TEST_CASE("vertex set is invariant under row permutation") {
  const auto d = lw_datum("1/2");
  const Systems systems = build_systems(d, datum::subspace_candidates(d, 3));
  ConstraintSystem shuffled = systems.qv;
  std::mt19937_64 rng(77);
  std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
  CHECK(vertex_points(enumerate_vertices(systems.qv)) ==
        vertex_points(enumerate_vertices(shuffled)));
}

TEST_CASE("vertex enumeration enforces the dimension cap") {
  ConstraintSystem system;
  system.dim = 9;
  CHECK_THROWS_AS(enumerate_vertices(system), DomainError);
}

TEST_CASE("decomposing a vertex returns it with weight one") {
  const auto d = lw_datum("1/2");
  const Systems systems = build_systems(d, datum::subspace_candidates(d, 3));
  const auto vertices = enumerate_vertices(systems.qv);
  const auto combo = decompose_convex(qv({q(1), q(1), q(0)}), vertices);
  REQUIRE(combo.vertices.size() == 1);
  CHECK(combo.vertices[0].p == qv({q(1), q(1), q(0)}));
  CHECK(combo.weights == std::vector<Rational>{q(1)});
}

TEST_CASE("decomposing a midpoint returns equal weights") {
  std::vector<Vertex> vertices = {Vertex{qv({q(0)}), {}},
                                  Vertex{qv({q(1)}), {}}};
  const auto combo = decompose_convex(qv({q(1, 2)}), vertices);
  REQUIRE(combo.weights.size() == 2);
  CHECK(combo.weights[0] == q(1, 2));
  CHECK(combo.weights[1] == q(1, 2));
}

TEST_CASE("decomposition of the interpolated exponent point") {
  const auto d = lw_datum("1/2");
  const Systems systems = build_systems(d, datum::subspace_candidates(d, 3));
  const auto vertices = enumerate_vertices(systems.qv);
  const Vec target = qv({q(3, 4), q(3, 4), q(1, 2)});
  const auto combo = decompose_convex(target, vertices);

  REQUIRE(combo.vertices.size() <= 4);
  Rational total(0);
  Vec rebuilt(3, q(0));
  for (std::size_t i = 0; i < combo.vertices.size(); ++i) {
    CHECK(combo.weights[i] > 0);
    total += combo.weights[i];
    for (std::size_t r = 0; r < 3; ++r) {
      rebuilt[r] += combo.weights[i] * combo.vertices[i].p[r];
    }
  }
  CHECK(total == q(1));
  CHECK(rebuilt == target);
}

TEST_CASE("points outside the hull raise a separating error") {
  std::vector<Vertex> vertices = {Vertex{qv({q(0)}), {}},
                                  Vertex{qv({q(1)}), {}}};
  CHECK_THROWS_WITH_AS(decompose_convex(qv({q(2)}), vertices),
                       doctest::Contains("separating"), DomainError);
}

TEST_CASE("clipping exponents above one") {
  const auto a = clip_exponents({q(2), q(1, 2)});
  CHECK(a.p == std::vector<Rational>{q(1), q(1, 2)});
  CHECK(a.clipped == std::vector<std::size_t>{0});

  const auto b = clip_exponents({q(1, 2), q(1, 2)});
  CHECK(b.p == std::vector<Rational>{q(1, 2), q(1, 2)});
  CHECK(b.clipped.empty());

  const auto c = clip_exponents({q(3, 2), q(3, 2)});
  CHECK(c.p == std::vector<Rational>{q(1), q(1)});
  CHECK(c.clipped == std::vector<std::size_t>{0, 1});
}

TEST_CASE("random systems agree with a grid-and-hull cross-check") {
  std::mt19937_64 rng(160914);
  std::uniform_int_distribution<int> coeff(-3, 3);
  std::uniform_int_distribution<int> bound(-2, 3);
  const std::vector<Rational> grid_values = {q(0), q(1, 3), q(1, 2), q(2, 3),
                                             q(1)};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + trial % 3;
    ConstraintSystem system;
    system.dim = m;
    for (std::size_t j = 0; j < m; ++j) {
      Constraint lower;
      lower.coeffs.assign(m, q(0));
      lower.coeffs[j] = q(-1);
      lower.bound = q(0);
      lower.tag = Constraint::Tag::BoxLower;
      system.rows.push_back(lower);
      Constraint upper;
      upper.coeffs.assign(m, q(0));
      upper.coeffs[j] = q(1);
      upper.bound = q(1);
      upper.tag = Constraint::Tag::BoxUpper;
      system.rows.push_back(upper);
    }
    for (int extra = 0; extra < 3; ++extra) {
      Constraint row;
      row.coeffs.assign(m, q(0));
      for (auto& c : row.coeffs) c = q(coeff(rng));
      row.bound = q(bound(rng));
      system.rows.push_back(row);
    }

    const auto vertices = enumerate_vertices(system);
    for (const auto& v : vertices) {
      for (const auto& row : system.rows) {
        Rational lhs(0);
        for (std::size_t j = 0; j < m; ++j) lhs += row.coeffs[j] * v.p[j];
        REQUIRE(lhs <= row.bound);
      }
      REQUIRE(v.active.size() >= m);
    }

    // Every feasible grid point must decompose over the vertex set.
    std::vector<Vec> grid = {{}};
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<Vec> next;
      for (const auto& partial : grid) {
        for (const auto& value : grid_values) {
          Vec extended = partial;
          extended.push_back(value);
          next.push_back(std::move(extended));
        }
      }
      grid = std::move(next);
    }
    for (const auto& point : grid) {
      bool feasible = true;
      for (const auto& row : system.rows) {
        Rational lhs(0);
        for (std::size_t j = 0; j < m; ++j) lhs += row.coeffs[j] * point[j];
        if (lhs > row.bound) {
          feasible = false;
          break;
        }
      }
      if (!feasible) continue;
      REQUIRE(!vertices.empty());
      const auto combo = decompose_convex(point, vertices);
      Vec rebuilt(m, q(0));
      Rational total(0);
      for (std::size_t i = 0; i < combo.vertices.size(); ++i) {
        total += combo.weights[i];
        for (std::size_t r = 0; r < m; ++r) {
          rebuilt[r] += combo.weights[i] * combo.vertices[i].p[r];
        }
      }
      REQUIRE(total == q(1));
      REQUIRE(rebuilt == point);
    }
  }
}
