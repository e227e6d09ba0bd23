#include "blsos/polytope.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace blsos::polytope {

using exactalg::Mat;

namespace {

bool rows_equal(const Constraint& a, const Constraint& b) {
  return a.coeffs == b.coeffs && a.bound == b.bound;
}

void push_unique(ConstraintSystem& system, Constraint row) {
  const bool trivial =
      std::all_of(row.coeffs.begin(), row.coeffs.end(),
                  [](const Rational& c) { return c == 0; }) &&
      row.bound >= 0;
  if (trivial) return;
  for (const auto& existing : system.rows) {
    if (rows_equal(existing, row)) return;
  }
  system.rows.push_back(std::move(row));
}

}  // namespace

Systems build_systems(const datum::BLDatum& datum,
                      const datum::CandidateFamily& family) {
  const std::size_t m = datum.m();
  Systems out;
  out.qv.dim = m;
  out.pv.dim = m;

  for (std::size_t j = 0; j < m; ++j) {
    Constraint lower;
    lower.coeffs.assign(m, Rational(0));
    lower.coeffs[j] = -1;
    lower.bound = 0;
    lower.tag = Constraint::Tag::BoxLower;
    lower.box_index = static_cast<int>(j);
    out.qv.rows.push_back(lower);
    out.pv.rows.push_back(lower);

    Constraint upper;
    upper.coeffs.assign(m, Rational(0));
    upper.coeffs[j] = 1;
    upper.bound = 1;
    upper.tag = Constraint::Tag::BoxUpper;
    upper.box_index = static_cast<int>(j);
    out.qv.rows.push_back(upper);
  }

  for (const auto& w : family.subspaces) {
    Constraint row;
    row.coeffs.assign(m, Rational(0));
    for (std::size_t j = 0; j < m; ++j) {
      const auto ki = exactalg::kernel_image(datum.maps[j], w);
      row.coeffs[j] = -Rational(static_cast<long>(ki.image.dim()));
    }
    row.bound = -Rational(static_cast<long>(w.dim()));
    row.tag = Constraint::Tag::Subspace;
    row.witness = w;
    push_unique(out.qv, std::move(row));
  }

  Constraint sum_upper;
  sum_upper.coeffs.assign(m, Rational(1));
  sum_upper.bound = 1;
  sum_upper.tag = Constraint::Tag::SimplexSum;
  out.pv.rows.push_back(sum_upper);
  Constraint sum_lower;
  sum_lower.coeffs.assign(m, Rational(-1));
  sum_lower.bound = -1;
  sum_lower.tag = Constraint::Tag::SimplexSum;
  out.pv.rows.push_back(sum_lower);

  return out;
}

namespace {

bool satisfies(const ConstraintSystem& system, const Vec& p) {
  for (const auto& row : system.rows) {
    Rational lhs(0);
    for (std::size_t j = 0; j < system.dim; ++j) lhs += row.coeffs[j] * p[j];
    if (lhs > row.bound) return false;
  }
  return true;
}

std::vector<std::size_t> tight_rows(const ConstraintSystem& system,
                                    const Vec& p) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < system.rows.size(); ++i) {
    Rational lhs(0);
    for (std::size_t j = 0; j < system.dim; ++j) {
      lhs += system.rows[i].coeffs[j] * p[j];
    }
    if (lhs == system.rows[i].bound) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<Vertex> enumerate_vertices(const ConstraintSystem& system,
                                       std::size_t cap) {
  const std::size_t m = system.dim;
  if (m > cap) {
    throw DomainError("vertex enumeration dimension " + std::to_string(m) +
                      " exceeds the cap " + std::to_string(cap));
  }
  if (m == 0) return {};
  std::map<Vec, Vertex> found;

  // Walk all m-subsets of rows with a fixed-size index odometer.
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  if (system.rows.size() < m) return {};
  while (true) {
    Mat a(m, m);
    Vec b(m);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) {
        a.at(r, c) = system.rows[idx[r]].coeffs[c];
      }
      b[r] = system.rows[idx[r]].bound;
    }
    if (exactalg::rank(a) == m) {
      const auto p = exactalg::solve(a, b);
      if (p && satisfies(system, *p) && !found.contains(*p)) {
        found.emplace(*p, Vertex{*p, tight_rows(system, *p)});
      }
    }
    // next subset
    std::size_t pos = m;
    while (pos > 0) {
      --pos;
      if (idx[pos] + (m - pos) < system.rows.size()) {
        ++idx[pos];
        for (std::size_t k = pos + 1; k < m; ++k) idx[k] = idx[k - 1] + 1;
        break;
      }
      if (pos == 0) {
        std::vector<Vertex> out;
        out.reserve(found.size());
        for (auto& [p, v] : found) out.push_back(std::move(v));
        return out;
      }
    }
  }
}

namespace {

/// Exact phase-1 simplex with Bland's rule for A·x = b, x >= 0.
/// On success `x` holds a basic feasible solution; on failure `dual` holds
/// a functional y with y·A_col <= 0 for every column but y·b > 0.
struct Phase1Result {
  bool feasible = false;
  Vec x;
  Vec dual;
};

Phase1Result phase1_simplex(Mat a, Vec b) {
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  for (std::size_t r = 0; r < m; ++r) {
    if (b[r] < 0) {
      b[r] = -b[r];
      for (std::size_t c = 0; c < k; ++c) a.at(r, c) = -a.at(r, c);
    }
  }
  // Tableau columns: k original, m artificial, 1 rhs.
  Mat t(m, k + m + 1);
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < k; ++c) t.at(r, c) = a.at(r, c);
    t.at(r, k + r) = 1;
    t.at(r, k + m) = b[r];
    basis[r] = k + r;
  }
  auto cost = [&](std::size_t col) {
    return col >= k ? Rational(1) : Rational(0);
  };
  auto reduced_cost = [&](std::size_t col) {
    Rational rc = cost(col);
    for (std::size_t r = 0; r < m; ++r) {
      if (t.at(r, col) != 0) rc -= cost(basis[r]) * t.at(r, col);
    }
    return rc;
  };

  while (true) {
    // Bland: entering column = least index with negative reduced cost.
    std::size_t enter = k + m;
    for (std::size_t col = 0; col < k + m; ++col) {
      if (reduced_cost(col) < 0) {
        enter = col;
        break;
      }
    }
    if (enter == k + m) break;
    // Ratio test; ties broken by least basic variable index (Bland).
    std::size_t leave = m;
    Rational best;
    for (std::size_t r = 0; r < m; ++r) {
      if (t.at(r, enter) <= 0) continue;
      const Rational ratio = t.at(r, k + m) / t.at(r, enter);
      if (leave == m || ratio < best ||
          (ratio == best && basis[r] < basis[leave])) {
        leave = r;
        best = ratio;
      }
    }
    if (leave == m) {
      throw InternalError("phase-1 simplex objective is unbounded");
    }
    // Pivot.
    const Rational inv = 1 / t.at(leave, enter);
    for (std::size_t c = 0; c <= k + m; ++c) t.at(leave, c) *= inv;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == leave || t.at(r, enter) == 0) continue;
      const Rational f = t.at(r, enter);
      for (std::size_t c = 0; c <= k + m; ++c) {
        t.at(r, c) -= f * t.at(leave, c);
      }
    }
    basis[leave] = enter;
  }

  Rational objective(0);
  for (std::size_t r = 0; r < m; ++r) {
    objective += cost(basis[r]) * t.at(r, k + m);
  }
  Phase1Result out;
  if (objective == 0) {
    out.feasible = true;
    out.x.assign(k, Rational(0));
    for (std::size_t r = 0; r < m; ++r) {
      if (basis[r] < k) out.x[basis[r]] = t.at(r, k + m);
    }
  } else {
    out.feasible = false;
    // y_r = 1 - reduced cost of artificial column r.
    out.dual.assign(m, Rational(0));
    for (std::size_t r = 0; r < m; ++r) {
      out.dual[r] = Rational(1) - reduced_cost(k + r);
    }
  }
  return out;
}

}  // namespace

ConvexCombination decompose_convex(const Vec& p,
                                   const std::vector<Vertex>& vertices) {
  if (vertices.empty()) throw DomainError("no vertices to decompose over");
  const std::size_t m = p.size();
  const std::size_t k = vertices.size();
  for (const auto& v : vertices) {
    if (v.p.size() != m) {
      throw DimensionError("vertex dimension does not match target");
    }
  }
  // Constraints: sum_i theta_i v_i = p and sum_i theta_i = 1.
  Mat a(m + 1, k);
  Vec b(m + 1);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t r = 0; r < m; ++r) a.at(r, i) = vertices[i].p[r];
    a.at(m, i) = 1;
  }
  for (std::size_t r = 0; r < m; ++r) b[r] = p[r];
  b[m] = 1;

  const Phase1Result lp = phase1_simplex(a, b);
  if (!lp.feasible) {
    std::ostringstream msg;
    msg << "point lies outside the hull; separating functional (";
    for (std::size_t r = 0; r <= m; ++r) {
      if (r > 0) msg << ", ";
      msg << exactalg::rational_to_string(lp.dual[r]);
    }
    msg << ") is nonpositive on every vertex but positive on the point";
    throw DomainError(msg.str());
  }

  Vec theta = lp.x;
  // Caratheodory: while the support columns are affinely dependent, move
  // along a dependency until a weight hits zero.
  while (true) {
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < k; ++i) {
      if (theta[i] != 0) support.push_back(i);
    }
    if (support.size() <= m + 1) {
      // Check affine independence; a dependency can persist even at small
      // support when vertices coincide in affine position.
      Mat cols(m + 1, support.size());
      for (std::size_t c = 0; c < support.size(); ++c) {
        for (std::size_t r = 0; r < m; ++r) {
          cols.at(r, c) = vertices[support[c]].p[r];
        }
        cols.at(m, c) = 1;
      }
      if (exactalg::rank(cols) == support.size()) break;
    }
    Mat cols(m + 1, support.size());
    for (std::size_t c = 0; c < support.size(); ++c) {
      for (std::size_t r = 0; r < m; ++r) {
        cols.at(r, c) = vertices[support[c]].p[r];
      }
      cols.at(m, c) = 1;
    }
    const auto ki = exactalg::kernel_image(exactalg::LinearMap(cols));
    if (ki.kernel.dim() == 0) break;
    Vec lambda = ki.kernel.basis_row(0);
    if (std::all_of(lambda.begin(), lambda.end(),
                    [](const Rational& x) { return x <= 0; })) {
      for (auto& x : lambda) x = -x;
    }
    // Largest step keeping theta >= 0; least index on ties.
    std::size_t drop = support.size();
    Rational step;
    for (std::size_t c = 0; c < support.size(); ++c) {
      if (lambda[c] <= 0) continue;
      const Rational ratio = theta[support[c]] / lambda[c];
      if (drop == support.size() || ratio < step) {
        drop = c;
        step = ratio;
      }
    }
    if (drop == support.size()) {
      throw InternalError("Caratheodory reduction found no leaving index");
    }
    for (std::size_t c = 0; c < support.size(); ++c) {
      theta[support[c]] -= step * lambda[c];
    }
    theta[support[drop]] = 0;  // exact by construction
  }

  ConvexCombination out;
  for (std::size_t i = 0; i < k; ++i) {
    if (theta[i] != 0) {
      out.vertices.push_back(vertices[i]);
      out.weights.push_back(theta[i]);
    }
  }
  return out;
}

ClippedExponents clip_exponents(const std::vector<Rational>& p) {
  ClippedExponents out;
  out.p = p;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] < 0) throw DomainError("negative exponent cannot be clipped");
    if (p[j] > 1) {
      out.p[j] = 1;
      out.clipped.push_back(j);
    }
  }
  return out;
}

}  // namespace blsos::polytope
