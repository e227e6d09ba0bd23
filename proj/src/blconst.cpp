#include "blsos/blconst.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

namespace blsos::blconst {

namespace {

/// Floor on the minimum eigenvalue of M below which the run is declared
/// divergent (the supremum is infinite).
constexpr double kDivergenceFloor = 1e-10;
/// Symmetry tolerance for caller-supplied starting matrices.
constexpr double kSymmetryTolerance = 1e-12;

double safe_det(const Eigen::MatrixXd& a) {
  return a.rows() == 0 ? 1.0 : a.determinant();
}

double min_eigenvalue(const Eigen::MatrixXd& sym) {
  if (sym.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

std::vector<Eigen::MatrixXd> starting_state(
    const std::vector<Eigen::MatrixXd>& maps,
    const GaussianOptions& options) {
  const std::size_t m = maps.size();
  std::vector<Eigen::MatrixXd> state;
  state.reserve(m);
  if (options.initial.empty()) {
    for (const auto& map : maps) {
      const Eigen::Index nj = map.rows();
      state.push_back(Eigen::MatrixXd::Identity(nj, nj));
    }
    return state;
  }
  if (options.initial.size() != m) {
    throw DimensionError("one starting matrix is required per map");
  }
  for (std::size_t j = 0; j < m; ++j) {
    const Eigen::MatrixXd& x = options.initial[j];
    if (x.rows() != x.cols() || x.rows() != maps[j].rows()) {
      throw DimensionError("starting matrix " + std::to_string(j + 1) +
                           " does not match the codomain of its map");
    }
    if (x.rows() > 0 &&
        (x - x.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
      throw DomainError("starting matrix " + std::to_string(j + 1) +
                        " is not symmetric");
    }
    state.push_back(x);
  }
  return state;
}

}  // namespace

GaussianReport bl_constant(const std::vector<Eigen::MatrixXd>& maps,
                           const std::vector<double>& exponents,
                           const GaussianOptions& options) {
  if (maps.empty()) {
    throw DimensionError("at least one map is required");
  }
  if (maps.size() != exponents.size()) {
    throw DimensionError("one exponent is required per map");
  }
  const Eigen::Index n = maps.front().cols();
  for (const auto& map : maps) {
    if (map.cols() != n) {
      throw DimensionError("all maps must share the domain dimension");
    }
  }
  for (double p : exponents) {
    if (!(p > 0.0)) {
      throw DomainError("exponents must be positive");
    }
  }

  const std::size_t m = maps.size();
  std::vector<Eigen::MatrixXd> state = starting_state(maps, options);

  GaussianReport report;
  double prev = 0.0;
  bool have_prev = false;
  for (int iter = 0;; ++iter) {
    Eigen::MatrixXd aggregate = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < m; ++j) {
      aggregate +=
          exponents[j] * (maps[j].transpose() * state[j] * maps[j]);
    }
    aggregate = 0.5 * (aggregate + aggregate.transpose()).eval();

    if (min_eigenvalue(aggregate) < kDivergenceFloor) {
      report.divergent = true;
      report.iterations = iter;
      break;
    }

    double objective = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      objective *= std::pow(safe_det(state[j]), exponents[j]);
    }
    objective /= safe_det(aggregate);
    report.objective = objective;
    report.trajectory.push_back(objective);

    if (have_prev &&
        std::abs(objective - prev) <= options.epsilon * std::abs(prev)) {
      report.converged = true;
      report.iterations = iter;
      break;
    }
    if (iter >= options.max_iters) {
      report.iterations = iter;
      break;
    }
    prev = objective;
    have_prev = true;

    const Eigen::MatrixXd inverse =
        n == 0 ? aggregate : Eigen::MatrixXd(aggregate.inverse());
    for (std::size_t j = 0; j < m; ++j) {
      if (maps[j].rows() == 0) continue;
      Eigen::MatrixXd pushed = maps[j] * inverse * maps[j].transpose();
      state[j] = pushed.inverse();
      state[j] = 0.5 * (state[j] + state[j].transpose()).eval();
    }
  }

  report.constant = std::sqrt(std::max(report.objective, 0.0));
  report.extremizers = std::move(state);
  return report;
}

GaussianReport bl_constant(const datum::BLDatum& instance,
                           const GaussianOptions& options) {
  std::vector<Eigen::MatrixXd> maps;
  maps.reserve(instance.m());
  for (const auto& map : instance.maps) {
    const Eigen::Index rows = static_cast<Eigen::Index>(map.matrix.rows());
    const Eigen::Index cols = static_cast<Eigen::Index>(map.matrix.cols());
    Eigen::MatrixXd dense(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        dense(r, c) = map.matrix
                          .at(static_cast<std::size_t>(r),
                              static_cast<std::size_t>(c))
                          .get_d();
      }
    }
    maps.push_back(std::move(dense));
  }
  std::vector<double> exponents;
  exponents.reserve(instance.m());
  for (const auto& p : instance.exponents.p) {
    exponents.push_back(p.get_d());
  }
  return bl_constant(maps, exponents, options);
}

}  // namespace blsos::blconst
