#pragma once

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "blsos/exactalg.hpp"

namespace blsos::datum {

using exactalg::LinearMap;
using exactalg::Rational;
using exactalg::Subspace;

/// SHA-256 of a byte string as lowercase hex.
std::string sha256_hex(const std::string& bytes);

/// The exponents p_j = s_j / s with s the least common denominator.
struct ExponentVector {
  std::vector<Rational> p;
  long s = 1;
  std::vector<long> s_list;
};

/// The finite point set V: either a box {0,...,side-1}^n or an explicit
/// list of distinct integer points.
class DomainSpec {
 public:
  static DomainSpec box(long side, std::size_t n);
  static DomainSpec points(std::vector<std::vector<long>> pts, std::size_t n);

  bool is_box() const { return is_box_; }
  long box_side() const { return side_; }
  std::size_t ambient_dim() const { return n_; }

  /// All points in deterministic (lexicographic) order.
  const std::vector<std::vector<long>>& points() const;

  nlohmann::ordered_json to_json() const;

 private:
  bool is_box_ = false;
  long side_ = 0;
  std::size_t n_ = 0;
  std::vector<std::vector<long>> points_;
};

/// A validated Brascamp-Lieb instance: integer surjective maps B_j,
/// exponents p_j, and the finite domain V.  All maps have integer entries;
/// the positive scale applied to each map at ingestion is recorded.
struct BLDatum {
  std::size_t n = 0;
  std::vector<LinearMap> maps;
  ExponentVector exponents;
  DomainSpec domain;
  std::vector<Rational> map_scales;

  std::size_t m() const { return maps.size(); }
  std::size_t codomain_dim(std::size_t j) const {
    return maps[j].codomain_dim();
  }

  /// The image point set V_j = B_j(V), deduplicated and sorted.
  std::vector<std::vector<long>> image_points(std::size_t j) const;
  /// B_j applied to an integer point, as integers.
  std::vector<long> map_point(std::size_t j,
                              const std::vector<long>& x) const;

  /// Canonical JSON (integerized maps, reduced exponents, sorted keys);
  /// the digest is the SHA-256 of its serialization.
  nlohmann::ordered_json canonical_json() const;
  std::string digest() const;
};

/// Builds and validates a datum from parts; rational map entries are
/// scaled to integers (scales recorded).  Throws DomainError when a map is
/// not surjective, an exponent is negative, or the domain is empty or
/// malformed.
BLDatum make_datum(std::size_t n, std::vector<LinearMap> maps,
                   std::vector<Rational> p, DomainSpec domain);

/// Parses and validates the JSON instance format
///   {"n": int, "maps": [[["a/b", ...], ...], ...], "p": ["a/b", ...],
///    "domain": {"box": k} | {"points": [[int, ...], ...]}}.
/// Map entries and exponents may be JSON integers or rational strings.
BLDatum validate(const nlohmann::json& raw);

/// Deterministic family of candidate subspaces: zero, full, all kernels
/// ker B_j, coordinate subspaces, spans of domain difference vectors, and
/// the closure of these seeds under sum and intersection up to `budget`
/// rounds.  Ordered by (dimension, canonical basis).
struct CandidateFamily {
  std::vector<Subspace> subspaces;
  bool truncated = false;
};

CandidateFamily subspace_candidates(const BLDatum& datum, std::size_t budget);

/// Feasibility verdict for the dimension condition
///   dim(W) <= sum_j p_j dim(B_j W)  for all subspaces W.
struct Feasibility {
  enum class Status { Feasible, Infeasible, Unknown };
  Status status = Status::Unknown;
  std::optional<Subspace> witness;  ///< violating W when Infeasible
};

/// Checks the dimension condition on every candidate, scanning from the
/// largest dimension down so a global violation is witnessed by the most
/// informative (largest) subspace.  Returns Unknown instead of Feasible
/// when the family was truncated by the budget.
Feasibility is_feasible(const BLDatum& datum, const CandidateFamily& family);

}  // namespace blsos::datum
