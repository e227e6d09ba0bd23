#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blsos/error.hpp"

namespace blsos::exactalg {

/// Arbitrary-precision rational; GMP keeps it reduced with a positive
/// denominator, so equality is structural.
using Rational = mpq_class;

/// Dense rational vector.
using Vec = std::vector<Rational>;

/// Parses "a" or "a/b" (optional leading sign on the numerator) into a
/// reduced rational.  Throws ParseError on malformed input or a zero
/// denominator.
Rational rational_from_string(const std::string& text);

/// Renders a rational as "a" (denominator one) or "a/b", always reduced.
std::string rational_to_string(const Rational& value);

/// Dense row-major matrix over the rationals.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols);

  static Mat identity(std::size_t n);
  /// Builds a matrix from explicit rows; every row must have length `cols`.
  static Mat from_rows(const std::vector<Vec>& rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rational& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Rational& at(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  Vec row(std::size_t r) const;
  Mat transposed() const;

  bool operator==(const Mat& other) const;
  bool operator!=(const Mat& other) const { return !(*this == other); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> data_;
};

Mat mat_mul(const Mat& a, const Mat& b);
Vec mat_apply(const Mat& a, const Vec& x);

/// Reduces `m` to reduced row echelon form in place (unit pivots, zeros
/// above and below each pivot) and returns the pivot columns in increasing
/// order.
std::vector<std::size_t> rref_in_place(Mat& m);

std::size_t rank(Mat m);

/// One exact solution of a·x = b with all free variables set to zero, or
/// nullopt when the system is inconsistent.
std::optional<Vec> solve(const Mat& a, const Vec& b);

/// Exact inverse, or nullopt when the matrix is singular.
std::optional<Mat> inverse(const Mat& a);

/// A linear subspace of Q^n in canonical form: the basis is in reduced row
/// echelon form with unit pivots and no zero rows, so two equal subspaces
/// compare equal structurally.  The zero subspace has a 0x n basis.
class Subspace {
 public:
  Subspace() = default;

  /// Canonicalizes the span of the given vectors.
  static Subspace span(const std::vector<Vec>& vectors,
                       std::size_t ambient_dim);
  static Subspace zero(std::size_t ambient_dim);
  static Subspace full(std::size_t ambient_dim);

  std::size_t ambient_dim() const { return ambient_; }
  std::size_t dim() const { return basis_.rows(); }
  const Mat& basis() const { return basis_; }
  Vec basis_row(std::size_t i) const { return basis_.row(i); }

  bool is_zero() const { return dim() == 0; }
  bool is_full() const { return dim() == ambient_; }

  bool contains(const Vec& v) const;
  bool contains(const Subspace& other) const;

  /// Coordinates of v in this subspace's basis, or nullopt when v lies
  /// outside.
  std::optional<Vec> coordinates_of(const Vec& v) const;
  /// The ambient vector with the given basis coordinates.
  Vec from_coordinates(const Vec& coords) const;

  bool operator==(const Subspace& other) const;
  bool operator!=(const Subspace& other) const { return !(*this == other); }

  /// Deterministic total order used wherever subspaces are enumerated:
  /// first by dimension, then lexicographically by the canonical basis
  /// entries in row-major order.
  static bool canonical_less(const Subspace& a, const Subspace& b);

 private:
  std::size_t ambient_ = 0;
  Mat basis_;  // RREF, no zero rows
};

Subspace sum(const Subspace& a, const Subspace& b);
Subspace intersect(const Subspace& a, const Subspace& b);

/// Deterministic complement U of W inside V (so W + U = V and W ∩ U = 0).
/// W's basis is rewritten in V-basis coordinates; the V-basis rows at the
/// non-pivot positions of that coordinate matrix span U.  When V is the
/// full space this picks exactly the standard basis vectors at W's
/// non-pivot columns.  Throws DomainError when W is not contained in V.
Subspace complement(const Subspace& w, const Subspace& v);

/// A linear map Q^domain -> Q^codomain stored as a codomain x domain
/// matrix.
struct LinearMap {
  Mat matrix;

  LinearMap() = default;
  explicit LinearMap(Mat m) : matrix(std::move(m)) {}

  std::size_t domain_dim() const { return matrix.cols(); }
  std::size_t codomain_dim() const { return matrix.rows(); }
  Vec apply(const Vec& x) const { return mat_apply(matrix, x); }

  bool operator==(const LinearMap& other) const {
    return matrix == other.matrix;
  }
};

struct KernelImage {
  Subspace kernel;
  Subspace image;
};

/// Kernel and image of the map restricted to `restrict_to` (the whole
/// domain when absent); both are returned in ambient coordinates, so the
/// kernel is a subspace of the domain and the image one of the codomain.
KernelImage kernel_image(
    const LinearMap& map,
    const std::optional<Subspace>& restrict_to = std::nullopt);

/// The data of a direct-sum split of a map along W ⊆ V: bases for the two
/// domain factors (W and a complement U) and the two image factors (map(W)
/// and a complement of it inside map(V)), the three coordinate blocks of
/// the map between them, and left-inverse matrices that turn ambient points
/// into factor coordinates.
struct SplitMaps {
  Subspace w;
  Subspace u;        ///< chosen complement of W in V
  Subspace image_w;  ///< map(W)
  Subspace image_c;  ///< chosen complement of map(W) inside map(V)

  LinearMap restricted;  ///< W-coordinates -> image_w-coordinates
  LinearMap quotient;    ///< U-coordinates -> image_c-coordinates
  Mat mixing;            ///< image_w-component of the map on U-coordinates

  Mat domain_coords;    ///< (dim W + dim U) x n left inverse valid on V
  Mat codomain_coords;  ///< analogous left inverse valid on map(V)

  /// Splits x ∈ V into its W-coordinates and U-coordinates.
  std::pair<Vec, Vec> split_point(const Vec& x) const;
};

/// Factors `map` along the splitting V = W ⊕ U: `restricted` is the action
/// on W, `quotient` the induced action on U modulo map(W), and `mixing` the
/// leakage of U into map(W).  For every x = w + u in V,
///   map(x) = image_w(restricted·a + mixing·b) + image_c(quotient·b)
/// where (a, b) = split_point(x).  Throws DomainError unless W ⊆ V ⊆ domain.
SplitMaps restrict_and_quotient(const LinearMap& map, const Subspace& w,
                                const Subspace& v);

}  // namespace blsos::exactalg
