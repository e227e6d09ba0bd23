#pragma once

#include <Eigen/Dense>

#include <vector>

#include "blsos/datum.hpp"
#include "blsos/error.hpp"

namespace blsos::blconst {

/// Controls for the Gaussian fixed-point iteration.
struct GaussianOptions {
  /// Relative objective change below which the iteration is declared
  /// converged.
  double epsilon = 1e-9;
  /// Hard cap on the number of update steps.
  int max_iters = 1000;
  /// Optional starting matrices X_j (one symmetric positive definite matrix
  /// per map, dimension = the map's codomain).  Empty means identities.
  std::vector<Eigen::MatrixXd> initial;
};

/// Outcome of the fixed-point iteration for the optimal inequality constant.
struct GaussianReport {
  /// C = sqrt(objective) at the final state.  When the run diverged this is
  /// the last finite snapshot (the true constant is infinite).
  double constant = 0.0;
  /// Final value of prod_j det(X_j)^{p_j} / det(sum_j p_j B_j^T X_j B_j).
  double objective = 0.0;
  /// Number of update steps performed.
  int iterations = 0;
  /// True when the relative objective change fell below epsilon.
  bool converged = false;
  /// True when the aggregate matrix M lost positive definiteness, i.e. the
  /// supremum is infinite and the instance is infeasible.
  bool divergent = false;
  /// Objective value after every evaluation, in order.
  std::vector<double> trajectory;
  /// Final matrices X_j.
  std::vector<Eigen::MatrixXd> extremizers;
};

/// Approximates the optimal constant
///
///   C = sup_X [ prod_j det(X_j)^{p_j} / det(sum_j p_j B_j^T X_j B_j) ]^{1/2}
///
/// over positive definite X_j by the fixed-point update
/// X_j <- (B_j M^{-1} B_j^T)^{-1} with M = sum_j p_j B_j^T X_j B_j, starting
/// from identities (or `options.initial`).  Divergence — the minimum
/// eigenvalue of M falling below 1e-10 — signals an infinite constant.
///
/// Preconditions: every p_j > 0 and every B_j surjective.  Throws
/// DimensionError on shape mismatches and DomainError on non-symmetric
/// initial matrices or nonpositive exponents.
GaussianReport bl_constant(const std::vector<Eigen::MatrixXd>& maps,
                           const std::vector<double>& exponents,
                           const GaussianOptions& options = {});

/// Convenience overload reading the maps and exponents from an exact
/// instance.
GaussianReport bl_constant(const datum::BLDatum& instance,
                           const GaussianOptions& options = {});

}  // namespace blsos::blconst
