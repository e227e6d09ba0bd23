#include "blsos/datum.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <set>

namespace blsos::datum {

using exactalg::Mat;
using exactalg::Vec;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw InternalError("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

DomainSpec DomainSpec::box(long side, std::size_t n) {
  if (side < 1) throw DomainError("empty domain: box side must be >= 1");
  DomainSpec d;
  d.is_box_ = true;
  d.side_ = side;
  d.n_ = n;
  // Lexicographic enumeration of {0,...,side-1}^n.
  std::vector<long> current(n, 0);
  while (true) {
    d.points_.push_back(current);
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++current[i] < side) break;
      current[i] = 0;
      if (i == 0) return d;
    }
    if (n == 0) return d;
  }
}

DomainSpec DomainSpec::points(std::vector<std::vector<long>> pts,
                              std::size_t n) {
  DomainSpec d;
  d.is_box_ = false;
  d.n_ = n;
  for (const auto& p : pts) {
    if (p.size() != n) {
      throw DomainError("domain point has dimension " +
                        std::to_string(p.size()) + ", expected " +
                        std::to_string(n));
    }
  }
  std::sort(pts.begin(), pts.end());
  if (std::adjacent_find(pts.begin(), pts.end()) != pts.end()) {
    throw DomainError("duplicate domain point");
  }
  d.points_ = std::move(pts);
  return d;
}

const std::vector<std::vector<long>>& DomainSpec::points() const {
  return points_;
}

nlohmann::ordered_json DomainSpec::to_json() const {
  nlohmann::ordered_json out;
  if (is_box_) {
    out["box"] = side_;
  } else {
    out["points"] = points_;
  }
  return out;
}

std::vector<std::vector<long>> BLDatum::image_points(std::size_t j) const {
  std::set<std::vector<long>> seen;
  for (const auto& x : domain.points()) seen.insert(map_point(j, x));
  return {seen.begin(), seen.end()};
}

std::vector<long> BLDatum::map_point(std::size_t j,
                                     const std::vector<long>& x) const {
  const Mat& b = maps[j].matrix;
  std::vector<long> out(b.rows(), 0);
  for (std::size_t r = 0; r < b.rows(); ++r) {
    Rational acc(0);
    for (std::size_t c = 0; c < b.cols(); ++c) {
      acc += b.at(r, c) * Rational(x[c]);
    }
    if (acc.get_den() != 1 || !acc.get_num().fits_slong_p()) {
      throw InternalError("map image of an integer point is not a small "
                          "integer");
    }
    out[r] = acc.get_num().get_si();
  }
  return out;
}

nlohmann::ordered_json BLDatum::canonical_json() const {
  nlohmann::ordered_json out;
  out["n"] = n;
  nlohmann::ordered_json jmaps = nlohmann::ordered_json::array();
  for (const auto& map : maps) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < map.matrix.rows(); ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (std::size_t c = 0; c < map.matrix.cols(); ++c) {
        row.push_back(exactalg::rational_to_string(map.matrix.at(r, c)));
      }
      rows.push_back(row);
    }
    jmaps.push_back(rows);
  }
  out["maps"] = jmaps;
  nlohmann::ordered_json jp = nlohmann::ordered_json::array();
  for (const auto& pj : exponents.p) {
    jp.push_back(exactalg::rational_to_string(pj));
  }
  out["p"] = jp;
  out["domain"] = domain.to_json();
  return out;
}

std::string BLDatum::digest() const { return sha256_hex(canonical_json().dump()); }

BLDatum make_datum(std::size_t n, std::vector<LinearMap> maps,
                   std::vector<Rational> p, DomainSpec domain) {
  if (maps.empty()) throw DomainError("instance needs at least one map");
  if (maps.size() != p.size()) {
    throw DomainError("exponent count " + std::to_string(p.size()) +
                      " does not match map count " +
                      std::to_string(maps.size()));
  }
  if (domain.ambient_dim() != n) {
    throw DomainError("domain ambient dimension does not match n");
  }
  if (domain.points().empty()) throw DomainError("empty domain");

  BLDatum out;
  out.n = n;
  out.domain = std::move(domain);

  for (std::size_t j = 0; j < maps.size(); ++j) {
    Mat& mat = maps[j].matrix;
    if (mat.cols() != n) {
      throw DomainError("map " + std::to_string(j) + " has domain dimension " +
                        std::to_string(mat.cols()) + ", expected " +
                        std::to_string(n));
    }
    // Scale rational entries to integers; the scale is recorded and has no
    // effect on ranks or on the inequality (it relabels image points).
    mpz_class scale(1);
    for (std::size_t r = 0; r < mat.rows(); ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        mpz_lcm(scale.get_mpz_t(), scale.get_mpz_t(),
                mat.at(r, c).get_den().get_mpz_t());
      }
    }
    if (scale != 1) {
      for (std::size_t r = 0; r < mat.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          mat.at(r, c) *= Rational(scale);
        }
      }
    }
    out.map_scales.emplace_back(scale);
    const std::size_t nj = mat.rows();
    const std::size_t r = exactalg::rank(mat);
    if (r != nj) {
      throw DomainError("map " + std::to_string(j) +
                        " is not surjective onto its codomain (rank " +
                        std::to_string(r) + " of " + std::to_string(nj) +
                        ", deficit " + std::to_string(nj - r) + ")");
    }
  }
  out.maps = std::move(maps);

  mpz_class s(1);
  for (const auto& pj : p) {
    if (pj < 0) {
      throw DomainError("negative exponent " +
                        exactalg::rational_to_string(pj));
    }
    mpz_lcm(s.get_mpz_t(), s.get_mpz_t(), pj.get_den().get_mpz_t());
  }
  if (!s.fits_slong_p()) {
    throw DomainError("exponent denominator overflow");
  }
  out.exponents.p = std::move(p);
  out.exponents.s = s.get_si();
  for (const auto& pj : out.exponents.p) {
    const Rational sj = pj * Rational(s);
    if (sj.get_den() != 1 || !sj.get_num().fits_slong_p()) {
      throw InternalError("s_j is not an integer after common-denominator "
                          "lifting");
    }
    out.exponents.s_list.push_back(sj.get_num().get_si());
  }
  return out;
}

namespace {

Rational json_rational(const nlohmann::json& value, const char* what) {
  if (value.is_number_integer()) {
    return Rational(value.get<long>());
  }
  if (value.is_string()) {
    return exactalg::rational_from_string(value.get<std::string>());
  }
  throw ParseError(std::string(what) +
                   " must be an integer or a rational string");
}

}  // namespace

BLDatum validate(const nlohmann::json& raw) {
  if (!raw.is_object()) throw ParseError("instance must be a JSON object");
  for (const char* key : {"n", "maps", "p", "domain"}) {
    if (!raw.contains(key)) {
      throw ParseError(std::string("instance is missing the '") + key +
                       "' field");
    }
  }
  if (!raw["n"].is_number_integer() || raw["n"].get<long>() < 0) {
    throw ParseError("'n' must be a nonnegative integer");
  }
  const std::size_t n = raw["n"].get<std::size_t>();

  if (!raw["maps"].is_array()) throw ParseError("'maps' must be an array");
  std::vector<LinearMap> maps;
  for (const auto& jmap : raw["maps"]) {
    if (!jmap.is_array()) {
      throw ParseError("each map must be an array of rows");
    }
    std::vector<Vec> rows;
    for (const auto& jrow : jmap) {
      if (!jrow.is_array() || jrow.size() != n) {
        throw ParseError("each map row must be an array of length n");
      }
      Vec row;
      for (const auto& entry : jrow) {
        row.push_back(json_rational(entry, "map entry"));
      }
      rows.push_back(std::move(row));
    }
    maps.emplace_back(Mat::from_rows(rows, n));
  }

  if (!raw["p"].is_array()) throw ParseError("'p' must be an array");
  std::vector<Rational> p;
  for (const auto& entry : raw["p"]) {
    p.push_back(json_rational(entry, "exponent"));
  }

  const auto& jdom = raw["domain"];
  if (!jdom.is_object()) throw ParseError("'domain' must be an object");
  DomainSpec domain = DomainSpec::box(1, 0);
  if (jdom.contains("box")) {
    if (!jdom["box"].is_number_integer()) {
      throw ParseError("'domain.box' must be an integer");
    }
    domain = DomainSpec::box(jdom["box"].get<long>(), n);
  } else if (jdom.contains("points")) {
    if (!jdom["points"].is_array()) {
      throw ParseError("'domain.points' must be an array");
    }
    std::vector<std::vector<long>> pts;
    for (const auto& jpt : jdom["points"]) {
      if (!jpt.is_array()) throw ParseError("domain points must be arrays");
      std::vector<long> pt;
      for (const auto& coord : jpt) {
        if (!coord.is_number_integer()) {
          throw ParseError("domain point coordinates must be integers");
        }
        pt.push_back(coord.get<long>());
      }
      pts.push_back(std::move(pt));
    }
    domain = DomainSpec::points(std::move(pts), n);
  } else {
    throw ParseError("'domain' must contain 'box' or 'points'");
  }

  return make_datum(n, std::move(maps), std::move(p), std::move(domain));
}

namespace {

struct CanonicalLess {
  bool operator()(const Subspace& a, const Subspace& b) const {
    return Subspace::canonical_less(a, b);
  }
};

constexpr std::size_t kMaxFamilySize = 2048;
constexpr std::size_t kMaxCoordinateDim = 10;

}  // namespace

CandidateFamily subspace_candidates(const BLDatum& datum, std::size_t budget) {
  if (budget < 1) throw DomainError("candidate budget must be >= 1");
  const std::size_t n = datum.n;
  std::set<Subspace, CanonicalLess> family;
  bool truncated = false;

  family.insert(Subspace::zero(n));
  family.insert(Subspace::full(n));
  for (const auto& map : datum.maps) {
    family.insert(exactalg::kernel_image(map).kernel);
  }

  // Coordinate subspaces (all 2^n of them for small n).
  if (n <= kMaxCoordinateDim) {
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
      std::vector<Vec> gens;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (std::size_t{1} << i)) {
          Vec e(n, Rational(0));
          e[i] = 1;
          gens.push_back(std::move(e));
        }
      }
      family.insert(Subspace::span(gens, n));
    }
  } else {
    truncated = true;
    for (std::size_t i = 0; i < n; ++i) {
      Vec e(n, Rational(0));
      e[i] = 1;
      family.insert(Subspace::span({e}, n));
    }
  }

  // The span of the difference vectors of the domain points, so the
  // effective linear span of V is respected even when V does not span Z^n.
  // (Differences against the first point generate the same span as all
  // pairwise differences.)
  const auto& pts = datum.domain.points();
  std::vector<Vec> diffs;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    Vec d(n);
    for (std::size_t c = 0; c < n; ++c) {
      d[c] = Rational(pts[i][c] - pts[0][c]);
    }
    diffs.push_back(std::move(d));
  }
  family.insert(Subspace::span(diffs, n));

  // Closure under sum and intersection, iterated to the budget.
  for (std::size_t round = 0; round < budget; ++round) {
    const std::vector<Subspace> snapshot(family.begin(), family.end());
    bool grew = false;
    for (std::size_t i = 0; i < snapshot.size() && !truncated; ++i) {
      for (std::size_t k = i + 1; k < snapshot.size(); ++k) {
        if (family.size() >= kMaxFamilySize) {
          truncated = true;
          break;
        }
        grew |= family.insert(exactalg::sum(snapshot[i], snapshot[k])).second;
        grew |= family
                    .insert(exactalg::intersect(snapshot[i], snapshot[k]))
                    .second;
      }
    }
    if (!grew) break;
    if (round + 1 == budget && grew) truncated = true;
  }

  return CandidateFamily{{family.begin(), family.end()}, truncated};
}

Feasibility is_feasible(const BLDatum& datum, const CandidateFamily& family) {
  for (auto it = family.subspaces.rbegin(); it != family.subspaces.rend();
       ++it) {
    const Subspace& w = *it;
    Rational weighted(0);
    for (std::size_t j = 0; j < datum.m(); ++j) {
      const auto ki = exactalg::kernel_image(datum.maps[j], w);
      weighted += datum.exponents.p[j] * Rational(long(ki.image.dim()));
    }
    if (Rational(long(w.dim())) > weighted) {
      return Feasibility{Feasibility::Status::Infeasible, w};
    }
  }
  if (family.truncated) {
    return Feasibility{Feasibility::Status::Unknown, std::nullopt};
  }
  return Feasibility{Feasibility::Status::Feasible, std::nullopt};
}

}  // namespace blsos::datum
