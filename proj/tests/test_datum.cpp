#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "blsos/datum.hpp"

using namespace blsos;
using namespace blsos::datum;
using exactalg::LinearMap;
using exactalg::Mat;
using exactalg::Rational;
using exactalg::Subspace;
using exactalg::Vec;
using nlohmann::json;

namespace {

Vec qv(const std::vector<int>& entries) {
  Vec out;
  for (int e : entries) out.emplace_back(e);
  return out;
}

json holder_json() {
  return json::parse(R"({
    "n": 1,
    "maps": [[[1]], [[1]]],
    "p": ["1/2", "1/2"],
    "domain": {"box": 2}
  })");
}

json lw_json(const std::string& pj) {
  json j;
  j["n"] = 3;
  j["maps"] = {{{0, 1, 0}, {0, 0, 1}},
               {{1, 0, 0}, {0, 0, 1}},
               {{1, 0, 0}, {0, 1, 0}}};
  j["p"] = {pj, pj, pj};
  j["domain"] = {{"box", 2}};
  return j;
}

}  // namespace

TEST_CASE("box domains enumerate lexicographically") {
  const DomainSpec d = DomainSpec::box(2, 2);
  const std::vector<std::vector<long>> expect = {
      {0, 0}, {0, 1}, {1, 0}, {1, 1}};
  CHECK(d.points() == expect);

  const DomainSpec point = DomainSpec::box(3, 0);
  CHECK(point.points() == std::vector<std::vector<long>>{{}});
}

TEST_CASE("validate accepts the two-factor datum on a line") {
  const BLDatum d = validate(holder_json());
  CHECK(d.n == 1);
  CHECK(d.m() == 2);
  CHECK(d.exponents.s == 2);
  CHECK(d.exponents.s_list == std::vector<long>{1, 1});
  CHECK(d.domain.points().size() == 2);
  CHECK(d.image_points(0) == std::vector<std::vector<long>>{{0}, {1}});
}

TEST_CASE("validate accepts the triple-projection datum on the cube") {
  const BLDatum d = validate(lw_json("1/2"));
  CHECK(d.n == 3);
  CHECK(d.m() == 3);
  CHECK(d.exponents.s == 2);
  CHECK(d.exponents.s_list == std::vector<long>{1, 1, 1});
  CHECK(d.domain.points().size() == 8);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(d.image_points(j).size() == 4);
  }
}

TEST_CASE("validate rejects non-surjective maps") {
  json j = holder_json();
  j["maps"][0] = {{0}};  // zero row onto a 1-dim codomain
  CHECK_THROWS_WITH_AS(validate(j),
                       doctest::Contains("not surjective"), DomainError);
}

TEST_CASE("validate rejects negative exponents and empty domains") {
  json bad_p = holder_json();
  bad_p["p"][0] = "-1/2";
  CHECK_THROWS_WITH_AS(validate(bad_p),
                       doctest::Contains("negative exponent"), DomainError);

  json empty_box = holder_json();
  empty_box["domain"] = {{"box", 0}};
  CHECK_THROWS_WITH_AS(validate(empty_box),
                       doctest::Contains("empty domain"), DomainError);

  json no_points = holder_json();
  no_points["domain"] = {{"points", json::array()}};
  CHECK_THROWS_WITH_AS(validate(no_points),
                       doctest::Contains("empty domain"), DomainError);

  json dup = holder_json();
  dup["domain"] = {{"points", {{0}, {0}}}};
  CHECK_THROWS_WITH_AS(validate(dup),
                       doctest::Contains("duplicate"), DomainError);
}

TEST_CASE("validate scales rational maps to integers and records the scale") {
  json j = holder_json();
  j["maps"][0] = {{"1/3"}};
  const BLDatum d = validate(j);
  CHECK(d.maps[0].matrix.at(0, 0) == Rational(1));
  CHECK(d.map_scales[0] == Rational(3));
  CHECK(d.map_scales[1] == Rational(1));
}

TEST_CASE("canonical digest is stable and input-sensitive") {
  const BLDatum a = validate(holder_json());
  const BLDatum b = validate(holder_json());
  CHECK(a.digest() == b.digest());
  CHECK(a.digest().size() == 64);

  json other = holder_json();
  other["p"] = {"1/3", "2/3"};
  CHECK(validate(other).digest() != a.digest());
}

TEST_CASE("candidates for the line datum are exactly zero and the line") {
  const BLDatum d = validate(holder_json());
  const CandidateFamily fam = subspace_candidates(d, 3);
  CHECK(!fam.truncated);
  REQUIRE(fam.subspaces.size() == 2);
  CHECK(fam.subspaces[0] == Subspace::zero(1));
  CHECK(fam.subspaces[1] == Subspace::full(1));
}

TEST_CASE("candidates for one identity map on the square") {
  json j;
  j["n"] = 2;
  j["maps"] = {{{1, 0}, {0, 1}}};
  j["p"] = {"1"};
  j["domain"] = {{"box", 2}};
  const BLDatum d = validate(j);
  const CandidateFamily fam = subspace_candidates(d, 3);
  CHECK(!fam.truncated);
  REQUIRE(fam.subspaces.size() == 4);
  CHECK(fam.subspaces[0] == Subspace::zero(2));
  CHECK(fam.subspaces[1] == Subspace::span({qv({0, 1})}, 2));
  CHECK(fam.subspaces[2] == Subspace::span({qv({1, 0})}, 2));
  CHECK(fam.subspaces[3] == Subspace::full(2));
}

TEST_CASE("candidates for the cube datum include the coordinate lattice") {
  const BLDatum d = validate(lw_json("1/2"));
  const CandidateFamily fam = subspace_candidates(d, 3);
  CHECK(!fam.truncated);
  const std::vector<Subspace> expect = {
      Subspace::zero(3),
      Subspace::span({qv({1, 0, 0})}, 3),
      Subspace::span({qv({0, 1, 0})}, 3),
      Subspace::span({qv({0, 0, 1})}, 3),
      Subspace::span({qv({1, 0, 0}), qv({0, 1, 0})}, 3),
      Subspace::span({qv({1, 0, 0}), qv({0, 0, 1})}, 3),
      Subspace::span({qv({0, 1, 0}), qv({0, 0, 1})}, 3),
      Subspace::full(3)};
  for (const auto& w : expect) {
    CHECK(std::find(fam.subspaces.begin(), fam.subspaces.end(), w) !=
          fam.subspaces.end());
  }
  // Deterministic: repeated runs give the same ordered family.
  const CandidateFamily again = subspace_candidates(d, 3);
  CHECK(fam.subspaces == again.subspaces);
  CHECK(std::is_sorted(fam.subspaces.begin(), fam.subspaces.end(),
                       Subspace::canonical_less));
}

TEST_CASE("feasibility of the cube datum") {
  const BLDatum half = validate(lw_json("1/2"));
  const auto fam = subspace_candidates(half, 3);
  const Feasibility feasible = is_feasible(half, fam);
  CHECK(feasible.status == Feasibility::Status::Feasible);

  const BLDatum quarter = validate(lw_json("1/4"));
  const Feasibility infeasible =
      is_feasible(quarter, subspace_candidates(quarter, 3));
  REQUIRE(infeasible.status == Feasibility::Status::Infeasible);
  REQUIRE(infeasible.witness.has_value());
  CHECK(*infeasible.witness == Subspace::full(3));

  // Independent re-check of the witness: dim W > sum p_j dim(B_j W).
  Rational weighted(0);
  for (std::size_t j = 0; j < quarter.m(); ++j) {
    weighted += quarter.exponents.p[j] *
                Rational(long(exactalg::kernel_image(quarter.maps[j],
                                                     *infeasible.witness)
                                  .image.dim()));
  }
  CHECK(Rational(3) > weighted);
}

TEST_CASE("feasibility is monotone in the candidate family") {
  const BLDatum quarter = validate(lw_json("1/4"));
  CandidateFamily small;
  small.subspaces = {Subspace::zero(3), Subspace::full(3)};
  small.truncated = false;
  CHECK(is_feasible(quarter, small).status ==
        Feasibility::Status::Infeasible);
}

TEST_CASE("zero-dimensional datum is feasible") {
  json j;
  j["n"] = 0;
  j["maps"] = {json::array()};  // one map with a 0-dim codomain
  j["p"] = {"7/2"};
  j["domain"] = {{"box", 1}};
  const BLDatum d = validate(j);
  CHECK(d.domain.points() == std::vector<std::vector<long>>{{}});
  const auto fam = subspace_candidates(d, 2);
  CHECK(fam.subspaces.size() == 1);
  CHECK(is_feasible(d, fam).status == Feasibility::Status::Feasible);
}

TEST_CASE("truncated families yield unknown instead of feasible") {
  const BLDatum d = validate(holder_json());
  CandidateFamily fam = subspace_candidates(d, 3);
  fam.truncated = true;
  CHECK(is_feasible(d, fam).status == Feasibility::Status::Unknown);
}

TEST_CASE("parse errors carry structural diagnostics") {
  CHECK_THROWS_AS(validate(json::parse("[]")), ParseError);
  json missing = holder_json();
  missing.erase("p");
  CHECK_THROWS_AS(validate(missing), ParseError);
  json bad_entry = holder_json();
  bad_entry["maps"][0][0][0] = true;
  CHECK_THROWS_AS(validate(bad_entry), ParseError);
}
