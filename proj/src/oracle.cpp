#include <blsos/oracle.hpp>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <utility>

#include <blsos/error.hpp>

namespace blsos::oracle {

namespace {

using datum::BLDatum;
using polyring::Monomial;
using polyring::Var;

/// Per-map tables of the L-th roots u of the assignment values; all the
/// norm arithmetic happens on these so fractional exponents never appear.
using RootTables = std::vector<std::map<std::vector<long>, Rational>>;

std::string csv(const std::vector<long>& point) {
  std::string out;
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(point[i]);
  }
  return out;
}

mpz_class int_pow(const mpz_class& base, long exp) {
  mpz_class out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(),
             static_cast<unsigned long>(exp));
  return out;
}

Rational rational_pow(const Rational& base, long exp) {
  if (exp == 0) return Rational(1);
  if (exp == 1) return base;
  return Rational(int_pow(base.get_num(), exp), int_pow(base.get_den(), exp));
}

Rational exact_root(const Rational& value, long power) {
  if (value < 0) {
    throw DomainError("assignment value " + exactalg::rational_to_string(value) +
                      " is negative");
  }
  if (power == 1) return value;
  mpz_class num = value.get_num();
  mpz_class den = value.get_den();
  mpz_class rnum;
  mpz_class rden;
  const int exact_num =
      mpz_root(rnum.get_mpz_t(), num.get_mpz_t(),
               static_cast<unsigned long>(power));
  const int exact_den =
      mpz_root(rden.get_mpz_t(), den.get_mpz_t(),
               static_cast<unsigned long>(power));
  if (exact_num == 0 || exact_den == 0) {
    throw DomainError("assignment value " + exactalg::rational_to_string(value) +
                      " is not an exact " + std::to_string(power) +
                      "-th power");
  }
  return Rational(rnum, rden);
}

/// RHS^s - LHS^s from root tables; the heart of every check below.
Rational gap_from_roots(const BLDatum& d, const RootTables& roots, long value_pow) {
  const long s = d.exponents.s;
  Rational lhs(0);
  for (const auto& x : d.domain.points()) {
    Rational term(1);
    for (std::size_t j = 0; j < d.m(); ++j) {
      const Rational& u = roots[j].at(d.map_point(j, x));
      if (u == 0) {
        term = 0;
        break;
      }
      term *= rational_pow(u, value_pow);
    }
    lhs += term;
  }
  Rational rhs(1);
  for (std::size_t j = 0; j < d.m(); ++j) {
    const long sj = d.exponents.s_list[j];
    if (sj > 0) {
      // ||f_j||_{1/p_j}^s = (sum_y f^{s/s_j})^{s_j}; f = u^L makes the
      // inner exponent (L/s_j)*s an integer.
      const long e = (value_pow / sj) * s;
      Rational inner(0);
      for (const auto& [y, u] : roots[j]) inner += rational_pow(u, e);
      rhs *= rational_pow(inner, sj);
    } else {
      // ||f_j||_inf^s = (max_y u)^{L s}.
      Rational best(0);
      for (const auto& [y, u] : roots[j]) best = std::max(best, u);
      rhs *= rational_pow(best, value_pow * s);
    }
  }
  return rhs - rational_pow(lhs, s);
}

Assignment assignment_from_roots(const BLDatum& d, const RootTables& roots,
                                 long value_pow) {
  Assignment a;
  a.tables.resize(d.m());
  for (std::size_t j = 0; j < d.m(); ++j) {
    for (const auto& [y, u] : roots[j]) {
      a.tables[j][y] = rational_pow(u, value_pow);
    }
  }
  return a;
}

RootTables zero_roots(const BLDatum& d) {
  RootTables roots(d.m());
  for (std::size_t j = 0; j < d.m(); ++j) {
    for (const auto& y : d.image_points(j)) roots[j][y] = 0;
  }
  return roots;
}

/// Indicator roots of the image of a domain subset.
RootTables indicator_roots(const BLDatum& d,
                           const std::vector<std::vector<long>>& subset) {
  RootTables roots = zero_roots(d);
  for (const auto& x : subset) {
    for (std::size_t j = 0; j < d.m(); ++j) roots[j][d.map_point(j, x)] = 1;
  }
  return roots;
}

}  // namespace

long value_power(const datum::BLDatum& d) {
  long out = 1;
  for (long sj : d.exponents.s_list) {
    if (sj > 0) out = std::lcm(out, sj);
  }
  return out;
}

Rational inequality_gap(const datum::BLDatum& d, const Assignment& a) {
  if (a.tables.size() != d.m()) {
    throw DomainError("assignment has " + std::to_string(a.tables.size()) +
                      " value tables; expected " + std::to_string(d.m()));
  }
  const long value_pow = value_power(d);
  RootTables roots(d.m());
  for (std::size_t j = 0; j < d.m(); ++j) {
    for (const auto& y : d.image_points(j)) {
      const auto it = a.tables[j].find(y);
      if (it == a.tables[j].end()) {
        throw DomainError("assignment is missing map " + std::to_string(j + 1) +
                          " at (" + csv(y) + ")");
      }
      roots[j][y] = exact_root(it->second, value_pow);
    }
  }
  return gap_from_roots(d, roots, value_pow);
}

CheckReport random_check(const datum::BLDatum& d, long trials,
                         std::uint64_t seed) {
  if (trials < 0) throw DomainError("trial count must be nonnegative");
  const long value_pow = value_power(d);
  std::vector<std::vector<std::vector<long>>> images(d.m());
  for (std::size_t j = 0; j < d.m(); ++j) images[j] = d.image_points(j);

  CheckReport report;
  report.trials = trials;
  for (long t = 0; t < trials; ++t) {
    // Per-trial generator so trials are order-independent and mergeable.
    std::mt19937_64 rng(seed ^
                        (0x9E3779B97F4A7C15ULL *
                         (static_cast<std::uint64_t>(t) + 1)));
    RootTables roots(d.m());
    for (std::size_t j = 0; j < d.m(); ++j) {
      for (const auto& y : images[j]) {
        roots[j][y] = Rational(static_cast<long>(rng() % 5));
      }
    }
    const Rational gap = gap_from_roots(d, roots, value_pow);
    if (gap < 0) ++report.violations;
    if (t == 0 || gap < report.min_gap) report.min_gap = gap;
  }
  return report;
}

std::optional<Assignment> find_violation(const datum::BLDatum& d) {
  const long value_pow = value_power(d);
  const auto& points = d.domain.points();
  const auto try_roots =
      [&](const RootTables& roots) -> std::optional<Assignment> {
    if (gap_from_roots(d, roots, value_pow) < 0) {
      return assignment_from_roots(d, roots, value_pow);
    }
    return std::nullopt;
  };

  // Scaling family: indicators of the sub-boxes [0,k)^n.  When the
  // dimension condition fails on the whole space the two sides scale as
  // |V| versus prod |V_j|^{p_j}, so one of these already violates.
  for (long k : {2L, 4L, 8L, 16L}) {
    std::vector<std::vector<long>> subset;
    for (const auto& x : points) {
      const bool inside = std::all_of(x.begin(), x.end(), [&](long c) {
        return c >= 0 && c < k;
      });
      if (inside) subset.push_back(x);
    }
    if (subset.empty()) continue;
    if (auto hit = try_roots(indicator_roots(d, subset))) return hit;
  }

  // When a violating subspace W is known, the indicator of W's lattice
  // points compares 2^dim(W)-style counts directly along W.
  const auto family = datum::subspace_candidates(d, 2);
  const auto feasibility = datum::is_feasible(d, family);
  if (feasibility.status == datum::Feasibility::Status::Infeasible &&
      feasibility.witness.has_value()) {
    std::vector<std::vector<long>> subset;
    for (const auto& x : points) {
      exactalg::Vec v(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) v[i] = Rational(x[i]);
      if (feasibility.witness->contains(v)) subset.push_back(x);
    }
    if (!subset.empty()) {
      if (auto hit = try_roots(indicator_roots(d, subset))) return hit;
    }
  }

  // Seeded random restarts with greedy +-1 adjustment of the root values.
  std::mt19937_64 rng(0xB1D0C5EEDULL);
  const int restarts = 64;
  const int passes = 3;
  for (int r = 0; r < restarts; ++r) {
    RootTables roots(d.m());
    for (std::size_t j = 0; j < d.m(); ++j) {
      for (const auto& y : d.image_points(j)) {
        roots[j][y] = Rational(static_cast<long>(rng() % 5));
      }
    }
    Rational best = gap_from_roots(d, roots, value_pow);
    if (best < 0) return assignment_from_roots(d, roots, value_pow);
    for (int pass = 0; pass < passes; ++pass) {
      bool improved = false;
      for (std::size_t j = 0; j < d.m(); ++j) {
        for (auto& [y, u] : roots[j]) {
          for (long delta : {1L, -1L}) {
            const Rational next = u + delta;
            if (next < 0 || next > 6) continue;
            const Rational saved = u;
            u = next;
            const Rational gap = gap_from_roots(d, roots, value_pow);
            if (gap < 0) return assignment_from_roots(d, roots, value_pow);
            if (gap < best) {
              best = gap;
              improved = true;
            } else {
              u = saved;
            }
          }
        }
      }
      if (!improved) break;
    }
  }
  return std::nullopt;
}

std::string monomial_key(const polyring::Monomial& m) {
  if (m.factors().empty()) return "1";
  std::vector<std::pair<std::uint32_t, std::pair<Var, unsigned>>> ranked;
  ranked.reserve(m.factors().size());
  for (const auto& f : m.factors()) {
    ranked.emplace_back(f.first.semantic_rank(), f);
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  for (const auto& [rank, f] : ranked) {
    if (!out.empty()) out += ' ';
    out += polyring::var_to_string(f.first);
    if (f.second > 1) out += "^" + std::to_string(f.second);
  }
  return out;
}

polyring::Monomial monomial_from_key(const std::string& text) {
  if (text == "1") return Monomial{};
  if (text.empty()) throw ParseError("empty monomial key");
  Monomial out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(' ', pos);
    if (end == std::string::npos) end = text.size();
    const std::string token = text.substr(pos, end - pos);
    if (token.empty()) {
      throw ParseError("malformed monomial key '" + text + "'");
    }
    std::string name = token;
    unsigned exp = 1;
    const std::size_t caret = token.rfind('^');
    if (caret != std::string::npos) {
      name = token.substr(0, caret);
      const std::string etext = token.substr(caret + 1);
      const bool digits =
          !etext.empty() &&
          std::all_of(etext.begin(), etext.end(), [](unsigned char c) {
            return std::isdigit(c) != 0;
          });
      if (!digits) {
        throw ParseError("malformed exponent in monomial key '" + text + "'");
      }
      long e = 0;
      try {
        e = std::stol(etext);
      } catch (const std::exception&) {
        throw ParseError("exponent out of range in monomial key '" + text +
                         "'");
      }
      if (e <= 0) {
        throw ParseError("exponent must be positive in monomial key '" + text +
                         "'");
      }
      exp = static_cast<unsigned>(e);
    }
    out = out.times(Monomial::variable(polyring::var_from_string(name), exp));
    pos = (end < text.size()) ? end + 1 : end;
  }
  return out;
}

std::vector<polyring::Monomial> moment_basis(const MomentTable& table,
                                             long bound) {
  if (bound < 0) throw DomainError("moment degree must be nonnegative");
  std::vector<std::pair<std::uint32_t, Var>> ranked;
  for (const auto& [key, value] : table.values) {
    const Monomial m = monomial_from_key(key);
    for (const auto& f : m.factors()) {
      ranked.emplace_back(f.first.semantic_rank(), f.first);
    }
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  ranked.erase(std::unique(ranked.begin(), ranked.end(),
                           [](const auto& a, const auto& b) {
                             return a.first == b.first;
                           }),
               ranked.end());
  std::vector<Var> vars;
  vars.reserve(ranked.size());
  for (const auto& [rank, v] : ranked) vars.push_back(v);

  // Size guard before enumeration: C(#vars + bound, bound).
  unsigned long long size = 1;
  for (long i = 1; i <= bound; ++i) {
    size = size * (vars.size() + static_cast<unsigned long long>(i)) /
           static_cast<unsigned long long>(i);
    if (size > 20000) {
      throw DomainError("moment basis is too large (more than 20000 monomials)");
    }
  }

  std::vector<Monomial> out;
  std::vector<std::pair<Var, unsigned>> current;
  const auto emit = [&]() {
    Monomial m;
    for (const auto& [v, e] : current) m = m.times(Monomial::variable(v, e));
    out.push_back(m);
  };
  const std::function<void(std::size_t, long)> rec = [&](std::size_t idx,
                                                         long remaining) {
    if (idx == vars.size()) {
      emit();
      return;
    }
    rec(idx + 1, remaining);
    for (long e = 1; e <= remaining; ++e) {
      current.emplace_back(vars[idx], static_cast<unsigned>(e));
      rec(idx + 1, remaining - e);
      current.pop_back();
    }
  };
  rec(0, bound);
  std::sort(out.begin(), out.end(), [](const Monomial& a, const Monomial& b) {
    if (a.total_degree() != b.total_degree()) {
      return a.total_degree() < b.total_degree();
    }
    return monomial_key(a) < monomial_key(b);
  });
  return out;
}

PseudoOutcome check_pseudo_expectation(const MomentTable& table, long d) {
  if (d < 0) throw DomainError("moment degree must be nonnegative");

  std::map<std::string, Rational> canon;
  for (const auto& [key, value] : table.values) {
    const std::string ck = monomial_key(monomial_from_key(key));
    const auto [it, fresh] = canon.emplace(ck, value);
    if (!fresh) throw DomainError("moment table repeats monomial " + ck);
  }
  const auto lookup = [&](const Monomial& m) -> const Rational& {
    const std::string key = monomial_key(m);
    const auto it = canon.find(key);
    if (it == canon.end()) {
      throw DomainError("moment table is missing monomial " + key);
    }
    return it->second;
  };

  if (lookup(Monomial{}) != 1) {
    PseudoOutcome out;
    out.pass = false;
    out.axiom = "normalization";
    return out;
  }

  const auto basis = moment_basis(table, d / 2);
  const std::size_t n = basis.size();
  std::vector<std::vector<Rational>> moment(n, std::vector<Rational>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      moment[i][j] = lookup(basis[i].times(basis[j]));
      moment[j][i] = moment[i][j];
    }
  }

  // Exact LDL^T with symmetric max-|diagonal| pivoting.  `lower` holds the
  // unit lower-triangular multipliers in permuted coordinates.
  std::vector<std::vector<Rational>> a = moment;
  std::vector<std::vector<Rational>> lower(n, std::vector<Rational>(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  const auto fail = [&](std::size_t k, std::size_t report_pos,
                        const std::vector<std::pair<std::size_t, Rational>>&
                            local,
                        const Rational& delta) {
    // Lift the Schur-block direction across the eliminated rows: with
    // M = [L11 0; L21 I][D 0; 0 S][...]^T, the vector z = [avec; v] with
    // L11^T avec = -L21^T v satisfies <z, M z> = <v, S v> = delta.
    std::vector<Rational> z(n);
    for (const auto& [pos, c] : local) z[pos] = c;
    std::vector<Rational> w(k);
    for (std::size_t c = 0; c < k; ++c) {
      for (const auto& [pos, cv] : local) w[c] += lower[pos][c] * cv;
    }
    for (std::size_t c = k; c-- > 0;) {
      Rational acc = -w[c];
      for (std::size_t r = c + 1; r < k; ++r) acc -= lower[r][c] * z[r];
      z[c] = acc;
    }
    std::vector<Rational> witness(n);
    for (std::size_t i = 0; i < n; ++i) witness[perm[i]] = z[i];
    for (std::size_t i = 0; i < n; ++i) {
      if (witness[i] == 0) continue;
      if (witness[i] < 0) {
        for (auto& entry : witness) entry = -entry;
      }
      break;
    }
    Rational form(0);
    for (std::size_t i = 0; i < n; ++i) {
      if (witness[i] == 0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        form += witness[i] * moment[i][j] * witness[j];
      }
    }
    if (form != delta) {
      throw InternalError("moment-matrix witness does not reproduce the pivot");
    }
    PseudoOutcome out;
    out.pass = false;
    out.axiom = "positivity";
    out.pivot = delta;
    out.pivot_index = perm[report_pos] + 1;
    out.witness = std::move(witness);
    return out;
  };

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (abs(a[i][i]) > abs(a[best][best])) best = i;
    }
    if (a[best][best] == 0) {
      // The remaining diagonal is zero; any off-diagonal entry is then a
      // certificate of indefiniteness, otherwise the block is zero.
      for (std::size_t i = k; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (a[i][j] == 0) continue;
          const Rational sign = (a[i][j] > 0) ? Rational(-1) : Rational(1);
          return fail(k, i, {{i, Rational(1)}, {j, sign}},
                      Rational(-2) * abs(a[i][j]));
        }
      }
      break;
    }
    if (best != k) {
      std::swap(a[best], a[k]);
      for (std::size_t i = 0; i < n; ++i) std::swap(a[i][best], a[i][k]);
      std::swap(lower[best], lower[k]);
      std::swap(perm[best], perm[k]);
    }
    const Rational pivot = a[k][k];
    if (pivot < 0) return fail(k, k, {{k, Rational(1)}}, pivot);
    for (std::size_t i = k + 1; i < n; ++i) lower[i][k] = a[i][k] / pivot;
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        a[i][j] -= lower[i][k] * a[k][j];
        a[j][i] = a[i][j];
      }
    }
  }
  return PseudoOutcome{};
}

}  // namespace blsos::oracle
