#include "blsos/exactalg.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace blsos::exactalg {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

}  // namespace

Rational rational_from_string(const std::string& text) {
  std::string num = text;
  std::string den = "1";
  if (auto slash = text.find('/'); slash != std::string::npos) {
    num = text.substr(0, slash);
    den = text.substr(slash + 1);
  }
  std::string digits = num;
  if (!digits.empty() && (digits[0] == '-' || digits[0] == '+')) {
    digits.erase(digits.begin());
  }
  if (!all_digits(digits) || !all_digits(den)) {
    throw ParseError("malformed rational: '" + text + "'");
  }
  mpz_class d(den);
  if (d == 0) {
    throw ParseError("zero denominator in rational: '" + text + "'");
  }
  Rational r(mpz_class(num), d);
  r.canonicalize();
  return r;
}

std::string rational_to_string(const Rational& value) {
  return value.get_str();
}

Mat::Mat(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, Rational(0)) {}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

Mat Mat::from_rows(const std::vector<Vec>& rows, std::size_t cols) {
  Mat m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw DimensionError("row length " + std::to_string(rows[r].size()) +
                           " does not match column count " +
                           std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

Vec Mat::row(std::size_t r) const {
  Vec out(cols_);
  for (std::size_t c = 0; c < cols_; ++c) out[c] = at(r, c);
  return out;
}

Mat Mat::transposed() const {
  Mat m(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) m.at(c, r) = at(r, c);
  }
  return m;
}

bool Mat::operator==(const Mat& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
}

Mat mat_mul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matrix product shape mismatch: " +
                         std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
  }
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (a.at(i, k) == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out.at(i, j) += a.at(i, k) * b.at(k, j);
      }
    }
  }
  return out;
}

Vec mat_apply(const Mat& a, const Vec& x) {
  if (a.cols() != x.size()) {
    throw DimensionError("matrix-vector shape mismatch: " +
                         std::to_string(a.cols()) + " vs " +
                         std::to_string(x.size()));
  }
  Vec out(a.rows(), Rational(0));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (a.at(i, j) != 0) out[i] += a.at(i, j) * x[j];
    }
  }
  return out;
}

std::vector<std::size_t> rref_in_place(Mat& m) {
  std::vector<std::size_t> pivots;
  std::size_t pivot_row = 0;
  for (std::size_t col = 0; col < m.cols() && pivot_row < m.rows(); ++col) {
    std::size_t sel = pivot_row;
    while (sel < m.rows() && m.at(sel, col) == 0) ++sel;
    if (sel == m.rows()) continue;
    if (sel != pivot_row) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        std::swap(m.at(sel, c), m.at(pivot_row, c));
      }
    }
    const Rational inv = 1 / m.at(pivot_row, col);
    for (std::size_t c = col; c < m.cols(); ++c) m.at(pivot_row, c) *= inv;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (r == pivot_row || m.at(r, col) == 0) continue;
      const Rational factor = m.at(r, col);
      for (std::size_t c = col; c < m.cols(); ++c) {
        m.at(r, c) -= factor * m.at(pivot_row, c);
      }
    }
    pivots.push_back(col);
    ++pivot_row;
  }
  return pivots;
}

std::size_t rank(Mat m) { return rref_in_place(m).size(); }

std::optional<Vec> solve(const Mat& a, const Vec& b) {
  if (a.rows() != b.size()) {
    throw DimensionError("solve: rhs length " + std::to_string(b.size()) +
                         " does not match row count " +
                         std::to_string(a.rows()));
  }
  Mat aug(a.rows(), a.cols() + 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) aug.at(r, c) = a.at(r, c);
    aug.at(r, a.cols()) = b[r];
  }
  const auto pivots = rref_in_place(aug);
  if (!pivots.empty() && pivots.back() == a.cols()) return std::nullopt;
  Vec x(a.cols(), Rational(0));
  for (std::size_t i = 0; i < pivots.size(); ++i) {
    x[pivots[i]] = aug.at(i, a.cols());
  }
  return x;
}

std::optional<Mat> inverse(const Mat& a) {
  if (a.rows() != a.cols()) return std::nullopt;
  const std::size_t n = a.rows();
  Mat aug(n, 2 * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) aug.at(r, c) = a.at(r, c);
    aug.at(r, n + r) = 1;
  }
  const auto pivots = rref_in_place(aug);
  if (pivots.size() != n || (n > 0 && pivots.back() != n - 1)) {
    return std::nullopt;
  }
  Mat inv(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) inv.at(r, c) = aug.at(r, n + c);
  }
  return inv;
}

Subspace Subspace::span(const std::vector<Vec>& vectors,
                        std::size_t ambient_dim) {
  Mat m = Mat::from_rows(vectors, ambient_dim);
  const auto pivots = rref_in_place(m);
  Subspace s;
  s.ambient_ = ambient_dim;
  s.basis_ = Mat(pivots.size(), ambient_dim);
  for (std::size_t r = 0; r < pivots.size(); ++r) {
    for (std::size_t c = 0; c < ambient_dim; ++c) {
      s.basis_.at(r, c) = m.at(r, c);
    }
  }
  return s;
}

Subspace Subspace::zero(std::size_t ambient_dim) {
  Subspace s;
  s.ambient_ = ambient_dim;
  s.basis_ = Mat(0, ambient_dim);
  return s;
}

Subspace Subspace::full(std::size_t ambient_dim) {
  Subspace s;
  s.ambient_ = ambient_dim;
  s.basis_ = Mat::identity(ambient_dim);
  return s;
}

bool Subspace::contains(const Vec& v) const {
  if (v.size() != ambient_) {
    throw DimensionError("vector length " + std::to_string(v.size()) +
                         " does not match ambient dimension " +
                         std::to_string(ambient_));
  }
  // Reduce v against the RREF basis; membership iff the residual is zero.
  Vec r = v;
  for (std::size_t i = 0; i < basis_.rows(); ++i) {
    std::size_t p = 0;
    while (p < ambient_ && basis_.at(i, p) == 0) ++p;
    if (p == ambient_ || r[p] == 0) continue;
    const Rational factor = r[p];
    for (std::size_t c = p; c < ambient_; ++c) {
      r[c] -= factor * basis_.at(i, c);
    }
  }
  return std::all_of(r.begin(), r.end(),
                     [](const Rational& x) { return x == 0; });
}

bool Subspace::contains(const Subspace& other) const {
  if (other.ambient_ != ambient_) {
    throw DimensionError("ambient dimension mismatch: " +
                         std::to_string(ambient_) + " vs " +
                         std::to_string(other.ambient_));
  }
  for (std::size_t i = 0; i < other.dim(); ++i) {
    if (!contains(other.basis_row(i))) return false;
  }
  return true;
}

std::optional<Vec> Subspace::coordinates_of(const Vec& v) const {
  return solve(basis_.transposed(), v);
}

Vec Subspace::from_coordinates(const Vec& coords) const {
  return mat_apply(basis_.transposed(), coords);
}

bool Subspace::operator==(const Subspace& other) const {
  return ambient_ == other.ambient_ && basis_ == other.basis_;
}

bool Subspace::canonical_less(const Subspace& a, const Subspace& b) {
  if (a.dim() != b.dim()) return a.dim() < b.dim();
  for (std::size_t r = 0; r < a.dim(); ++r) {
    for (std::size_t c = 0; c < a.ambient_dim(); ++c) {
      const int order = cmp(a.basis().at(r, c), b.basis().at(r, c));
      if (order != 0) return order < 0;
    }
  }
  return false;
}

Subspace sum(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw DimensionError("subspace sum: ambient mismatch");
  }
  std::vector<Vec> rows;
  for (std::size_t i = 0; i < a.dim(); ++i) rows.push_back(a.basis_row(i));
  for (std::size_t i = 0; i < b.dim(); ++i) rows.push_back(b.basis_row(i));
  return Subspace::span(rows, a.ambient_dim());
}

Subspace intersect(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw DimensionError("subspace intersection: ambient mismatch");
  }
  const std::size_t n = a.ambient_dim();
  const std::size_t ka = a.dim();
  const std::size_t kb = b.dim();
  if (ka == 0 || kb == 0) return Subspace::zero(n);
  // Columns are the basis vectors of a followed by those of b; a kernel
  // vector (alpha; beta) witnesses sum(alpha_i a_i) = -sum(beta_j b_j),
  // i.e. a point of the intersection.
  Mat stacked(n, ka + kb);
  for (std::size_t c = 0; c < ka; ++c) {
    for (std::size_t r = 0; r < n; ++r) stacked.at(r, c) = a.basis().at(c, r);
  }
  for (std::size_t c = 0; c < kb; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      stacked.at(r, ka + c) = b.basis().at(c, r);
    }
  }
  const KernelImage ki = kernel_image(LinearMap(std::move(stacked)));
  std::vector<Vec> gens;
  for (std::size_t i = 0; i < ki.kernel.dim(); ++i) {
    const Vec coeffs = ki.kernel.basis_row(i);
    Vec point(n, Rational(0));
    for (std::size_t j = 0; j < ka; ++j) {
      if (coeffs[j] == 0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        point[c] += coeffs[j] * a.basis().at(j, c);
      }
    }
    gens.push_back(std::move(point));
  }
  return Subspace::span(gens, n);
}

Subspace complement(const Subspace& w, const Subspace& v) {
  if (!v.contains(w)) {
    throw DomainError("complement: subspace is not contained in the ambient "
                      "space of the split");
  }
  // Rewrite W in V-basis coordinates and find the pivot positions; the
  // V-basis rows away from the pivots span the complement.
  Mat w_in_v(w.dim(), v.dim());
  for (std::size_t i = 0; i < w.dim(); ++i) {
    const auto coords = v.coordinates_of(w.basis_row(i));
    if (!coords) {
      throw InternalError("complement: containment check passed but "
                          "coordinates are unsolvable");
    }
    for (std::size_t c = 0; c < v.dim(); ++c) w_in_v.at(i, c) = (*coords)[c];
  }
  const auto pivots = rref_in_place(w_in_v);
  std::vector<Vec> gens;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    if (std::find(pivots.begin(), pivots.end(), i) == pivots.end()) {
      gens.push_back(v.basis_row(i));
    }
  }
  return Subspace::span(gens, v.ambient_dim());
}

KernelImage kernel_image(const LinearMap& map,
                         const std::optional<Subspace>& restrict_to) {
  const std::size_t n = map.domain_dim();
  if (restrict_to && restrict_to->ambient_dim() != n) {
    throw DimensionError("kernel_image: restriction ambient dimension " +
                         std::to_string(restrict_to->ambient_dim()) +
                         " does not match domain dimension " +
                         std::to_string(n));
  }
  if (!restrict_to) {
    // Kernel from the RREF free columns, image as the span of the columns.
    Mat m = map.matrix;
    const auto pivots = rref_in_place(m);
    std::vector<Vec> kernel_gens;
    std::size_t next_pivot = 0;
    for (std::size_t col = 0; col < n; ++col) {
      if (next_pivot < pivots.size() && pivots[next_pivot] == col) {
        ++next_pivot;
        continue;
      }
      Vec gen(n, Rational(0));
      gen[col] = 1;
      for (std::size_t i = 0; i < pivots.size(); ++i) {
        gen[pivots[i]] = -m.at(i, col);
      }
      kernel_gens.push_back(std::move(gen));
    }
    std::vector<Vec> image_gens;
    const Mat t = map.matrix.transposed();
    for (std::size_t i = 0; i < t.rows(); ++i) image_gens.push_back(t.row(i));
    return {Subspace::span(kernel_gens, n),
            Subspace::span(image_gens, map.codomain_dim())};
  }
  // Restrict to the subspace: compose with its basis and translate the
  // kernel back to ambient coordinates.
  const Subspace& r = *restrict_to;
  Mat composed = mat_mul(map.matrix, r.basis().transposed());
  const KernelImage inner = kernel_image(LinearMap(std::move(composed)));
  std::vector<Vec> kernel_gens;
  for (std::size_t i = 0; i < inner.kernel.dim(); ++i) {
    kernel_gens.push_back(r.from_coordinates(inner.kernel.basis_row(i)));
  }
  return {Subspace::span(kernel_gens, n), inner.image};
}

std::pair<Vec, Vec> SplitMaps::split_point(const Vec& x) const {
  const Vec coords = mat_apply(domain_coords, x);
  Vec a(coords.begin(), coords.begin() + static_cast<long>(w.dim()));
  Vec b(coords.begin() + static_cast<long>(w.dim()), coords.end());
  return {std::move(a), std::move(b)};
}

namespace {

/// Left inverse L of the stacked basis rows of (first, second): for every
/// x in first ⊕ second, L·x recovers the coordinates in the concatenated
/// basis.  Built as (B Bᵗ)⁻¹ B, which is exact because the rows are
/// independent.
Mat factor_coordinates(const Subspace& first, const Subspace& second) {
  const std::size_t n = first.ambient_dim();
  const std::size_t k = first.dim() + second.dim();
  Mat stacked(k, n);
  for (std::size_t i = 0; i < first.dim(); ++i) {
    for (std::size_t c = 0; c < n; ++c) {
      stacked.at(i, c) = first.basis().at(i, c);
    }
  }
  for (std::size_t i = 0; i < second.dim(); ++i) {
    for (std::size_t c = 0; c < n; ++c) {
      stacked.at(first.dim() + i, c) = second.basis().at(i, c);
    }
  }
  const Mat gram = mat_mul(stacked, stacked.transposed());
  const auto gram_inv = inverse(gram);
  if (!gram_inv) {
    throw InternalError("factor coordinates: dependent factor bases");
  }
  return mat_mul(*gram_inv, stacked);
}

}  // namespace

SplitMaps restrict_and_quotient(const LinearMap& map, const Subspace& w,
                                const Subspace& v) {
  if (v.ambient_dim() != map.domain_dim()) {
    throw DimensionError("restrict_and_quotient: ambient dimension " +
                         std::to_string(v.ambient_dim()) +
                         " does not match map domain " +
                         std::to_string(map.domain_dim()));
  }
  if (!v.contains(w)) {
    throw DomainError("restrict_and_quotient: W is not contained in V");
  }
  SplitMaps out;
  out.w = w;
  out.u = complement(w, v);
  out.image_w = kernel_image(map, w).image;
  const Subspace image_v = kernel_image(map, v).image;
  out.image_c = complement(out.image_w, image_v);

  // Column i of `restricted`: coordinates of map(w_i) inside map(W).
  out.restricted = LinearMap(Mat(out.image_w.dim(), w.dim()));
  for (std::size_t i = 0; i < w.dim(); ++i) {
    const auto coords = out.image_w.coordinates_of(map.apply(w.basis_row(i)));
    if (!coords) {
      throw InternalError("restrict_and_quotient: map(W) coordinates "
                          "unsolvable");
    }
    for (std::size_t r = 0; r < out.image_w.dim(); ++r) {
      out.restricted.matrix.at(r, i) = (*coords)[r];
    }
  }

  // Columns for U split into the map(W) component (mixing) and the
  // complement component (quotient).
  out.quotient = LinearMap(Mat(out.image_c.dim(), out.u.dim()));
  out.mixing = Mat(out.image_w.dim(), out.u.dim());
  const Mat img_coords = (out.image_w.dim() + out.image_c.dim()) > 0
                             ? factor_coordinates(out.image_w, out.image_c)
                             : Mat(0, map.codomain_dim());
  for (std::size_t i = 0; i < out.u.dim(); ++i) {
    const Vec y = mat_apply(img_coords, map.apply(out.u.basis_row(i)));
    for (std::size_t r = 0; r < out.image_w.dim(); ++r) {
      out.mixing.at(r, i) = y[r];
    }
    for (std::size_t r = 0; r < out.image_c.dim(); ++r) {
      out.quotient.matrix.at(r, i) = y[out.image_w.dim() + r];
    }
  }

  out.domain_coords = (w.dim() + out.u.dim()) > 0
                          ? factor_coordinates(w, out.u)
                          : Mat(0, map.domain_dim());
  out.codomain_coords = img_coords;
  return out;
}

}  // namespace blsos::exactalg
