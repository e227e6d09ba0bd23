#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "blsos/blconst.hpp"
#include "blsos/datum.hpp"
#include "doctest.h"

using namespace blsos;
using namespace blsos::blconst;
using exactalg::LinearMap;
using exactalg::Mat;
using exactalg::Rational;
using exactalg::Vec;

namespace {

Eigen::MatrixXd dense_rows(const std::vector<std::vector<double>>& rows,
                           Eigen::Index cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      out(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> axis_projections() {
  return {dense_rows({{0, 1, 0}, {0, 0, 1}}, 3),
          dense_rows({{1, 0, 0}, {0, 0, 1}}, 3),
          dense_rows({{1, 0, 0}, {0, 1, 0}}, 3)};
}

LinearMap exact_map(const std::vector<std::vector<long>>& rows,
                    std::size_t cols) {
  std::vector<Vec> rr;
  for (const auto& row : rows) {
    Vec v;
    for (long e : row) v.push_back(Rational(e));
    rr.push_back(std::move(v));
  }
  return LinearMap(Mat::from_rows(rr, cols));
}

void check_monotone(const GaussianReport& report) {
  REQUIRE(report.converged);
  for (std::size_t i = 1; i < report.trajectory.size(); ++i) {
    CHECK(report.trajectory[i] >= report.trajectory[i - 1] - 1e-12);
  }
}

}  // namespace

TEST_CASE("two identity factors at one-half reach constant one") {
  const std::vector<Eigen::MatrixXd> maps = {dense_rows({{1}}, 1),
                                             dense_rows({{1}}, 1)};
  const GaussianReport report = bl_constant(maps, {0.5, 0.5});
  CHECK(report.converged);
  CHECK_FALSE(report.divergent);
  CHECK(report.iterations < 1000);
  CHECK(report.constant == doctest::Approx(1.0).epsilon(1e-6));
  check_monotone(report);
}

TEST_CASE("axis projections at one-half are stationary at identity") {
  const GaussianReport report = bl_constant(axis_projections(), {0.5, 0.5, 0.5});
  CHECK(report.converged);
  CHECK(report.iterations < 1000);
  CHECK(report.constant == doctest::Approx(1.0).epsilon(1e-6));
  check_monotone(report);
  // The stationary point is the identity family.
  for (const auto& x : report.extremizers) {
    CHECK((x - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("axis projections at one-quarter diverge") {
  const GaussianReport report =
      bl_constant(axis_projections(), {0.25, 0.25, 0.25});
  CHECK(report.divergent);
  CHECK_FALSE(report.converged);
  CHECK(report.iterations > 0);
  CHECK(report.iterations < 1000);
}

TEST_CASE("identity pairs with complementary exponents stay at one") {
  for (double t : {0.25, 1.0 / 3.0, 0.7, 0.9}) {
    for (Eigen::Index n : {1, 2, 3}) {
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
      const GaussianReport report = bl_constant({id, id}, {t, 1.0 - t});
      CHECK(report.converged);
      CHECK(report.constant >= 1.0 - 1e-6);
      CHECK(report.constant <= 1.0 + 1e-6);
    }
  }
}

TEST_CASE("scaled maps move the iteration and converge to the exact ratio") {
  // B1 = [1], B2 = [2], p = (1/2, 1/2): the ratio sqrt(xy) / ((x + 4y)/2)
  // is maximized at x = 4y with value 1/2, so C = sqrt(1/2).
  const std::vector<Eigen::MatrixXd> maps = {dense_rows({{1}}, 1),
                                             dense_rows({{2}}, 1)};
  const GaussianReport report = bl_constant(maps, {0.5, 0.5});
  CHECK(report.converged);
  CHECK(report.constant == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  check_monotone(report);
  CHECK(report.trajectory.size() >= 2);
  CHECK(report.trajectory.back() > report.trajectory.front());
}

TEST_CASE("scaling the starting matrices leaves the constant unchanged") {
  GaussianOptions options;
  const GaussianReport base = bl_constant(axis_projections(), {0.5, 0.5, 0.5});
  options.initial = {10 * Eigen::MatrixXd::Identity(2, 2),
                     10 * Eigen::MatrixXd::Identity(2, 2),
                     10 * Eigen::MatrixXd::Identity(2, 2)};
  const GaussianReport scaled =
      bl_constant(axis_projections(), {0.5, 0.5, 0.5}, options);
  CHECK(scaled.converged);
  CHECK(std::abs(scaled.constant - base.constant) < options.epsilon);

  const std::vector<Eigen::MatrixXd> skew = {dense_rows({{1}}, 1),
                                             dense_rows({{2}}, 1)};
  const GaussianReport skew_base = bl_constant(skew, {0.5, 0.5});
  GaussianOptions skew_options;
  skew_options.initial = {10 * Eigen::MatrixXd::Identity(1, 1),
                          10 * Eigen::MatrixXd::Identity(1, 1)};
  const GaussianReport skew_scaled = bl_constant(skew, {0.5, 0.5}, skew_options);
  CHECK(std::abs(skew_scaled.constant - skew_base.constant) <
        skew_options.epsilon);
}

TEST_CASE("shape and symmetry validation") {
  const Eigen::MatrixXd id1 = Eigen::MatrixXd::Identity(1, 1);
  CHECK_THROWS_AS(
      bl_constant(std::vector<Eigen::MatrixXd>{}, std::vector<double>{}),
      DimensionError);
  CHECK_THROWS_AS(bl_constant({id1}, {0.5, 0.5}), DimensionError);
  CHECK_THROWS_AS(
      bl_constant({id1, Eigen::MatrixXd::Identity(2, 2)}, {0.5, 0.5}),
      DimensionError);
  CHECK_THROWS_AS(bl_constant({id1}, {-1.0}), DomainError);
  CHECK_THROWS_AS(bl_constant({id1}, {0.0}), DomainError);

  GaussianOptions options;
  options.initial = {Eigen::MatrixXd::Identity(1, 1)};
  CHECK_THROWS_AS(bl_constant({id1, id1}, {0.5, 0.5}, options),
                  DimensionError);
  options.initial = {Eigen::MatrixXd::Identity(2, 2)};
  CHECK_THROWS_AS(bl_constant({id1}, {1.0}, options), DimensionError);
  Eigen::MatrixXd skewed(2, 2);
  skewed << 1.0, 0.5, 0.0, 1.0;
  options.initial = {skewed};
  CHECK_THROWS_AS(
      bl_constant({Eigen::MatrixXd::Identity(2, 2)}, {1.0}, options),
      DomainError);
}

TEST_CASE("exact instances feed the iteration directly") {
  const LinearMap id = exact_map({{1}}, 1);
  const datum::BLDatum d = datum::make_datum(
      1, {id, id}, {Rational(1, 2), Rational(1, 2)},
      datum::DomainSpec::box(2, 1));
  const GaussianReport report = bl_constant(d);
  CHECK(report.converged);
  CHECK(report.constant == doctest::Approx(1.0).epsilon(1e-6));
}
