#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "blsos/datum.hpp"
#include "blsos/exactalg.hpp"

namespace blsos::polytope {

using exactalg::Rational;
using exactalg::Subspace;
using exactalg::Vec;

/// One inequality coeffs · p <= bound, tagged with its origin.
struct Constraint {
  enum class Tag { BoxLower, BoxUpper, Subspace, SimplexSum };

  Vec coeffs;
  Rational bound;
  Tag tag = Tag::Subspace;
  int box_index = -1;                ///< j for the box tags
  std::optional<Subspace> witness;   ///< W for subspace rows
};

/// A bounded polytope inside [0,1]^m given by <=-inequalities.
struct ConstraintSystem {
  std::size_t dim = 0;
  std::vector<Constraint> rows;
};

struct Systems {
  ConstraintSystem qv;  ///< dimension condition polytope
  ConstraintSystem pv;  ///< probability simplex
};

/// Builds the feasible-exponent polytope (box rows plus one row
///   sum_j dim(B_j W) p_j >= dim W
/// per candidate subspace, encoded in <=-sense) and the probability
/// simplex.  Trivial and duplicate rows are removed.
Systems build_systems(const datum::BLDatum& datum,
                      const datum::CandidateFamily& family);

/// An extreme point: the point itself plus the indices of every tight row.
struct Vertex {
  Vec p;
  std::vector<std::size_t> active;
};

/// Exhaustive exact vertex enumeration over all dim-subsets of rows;
/// deduplicated and sorted lexicographically.  Throws DomainError when the
/// dimension exceeds `cap`.
std::vector<Vertex> enumerate_vertices(const ConstraintSystem& system,
                                       std::size_t cap = 8);

/// Exact convex decomposition p = sum_i weight_i · vertex_i.
struct ConvexCombination {
  std::vector<Vertex> vertices;
  std::vector<Rational> weights;
};

/// Writes p as a convex combination of at most dim+1 of the given vertices
/// (exact phase-1 simplex with Bland's rule, then Caratheodory reduction).
/// Throws DomainError carrying a separating functional when p lies outside
/// the hull.
ConvexCombination decompose_convex(const Vec& p,
                                   const std::vector<Vertex>& vertices);

/// Entries above one are clipped to one; the affected indices are returned
/// so the prover can append norm-monotonicity steps.
struct ClippedExponents {
  std::vector<Rational> p;
  std::vector<std::size_t> clipped;
};

ClippedExponents clip_exponents(const std::vector<Rational>& p);

}  // namespace blsos::polytope
