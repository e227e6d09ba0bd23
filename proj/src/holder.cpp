#include "blsos/holder.hpp"

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "blsos/error.hpp"

namespace blsos::holder {

using certificate::Builder;
using certificate::CertKind;
using certificate::EqTerm;
using certificate::Piece;
using polyring::Monomial;
using polyring::SosExpr;
using polyring::Var;

namespace {

const Polynomial& poly_one() {
  static const Polynomial one{1};
  return one;
}

Polynomial poly_sum(const std::vector<Polynomial>& terms) {
  Polynomial acc;
  for (const Polynomial& t : terms) acc += t;
  return acc;
}

std::vector<Polynomial> pow_each(const std::vector<Polynomial>& terms,
                                 unsigned e) {
  std::vector<Polynomial> out;
  out.reserve(terms.size());
  for (const Polynomial& t : terms) out.push_back(t.pow(e));
  return out;
}

Monomial sqrt_monomial(const Monomial& m) {
  Monomial half;
  for (const auto& [var, exp] : m.factors()) {
    if (exp % 2 != 0)
      throw InternalError("square root of a monomial with an odd exponent");
    half = half.times(Monomial::variable(var, exp / 2));
  }
  return half;
}

void check_atoms(const std::vector<Polynomial>& atoms) {
  if (atoms.empty()) throw InternalError("gadget atom list is empty");
  for (const Polynomial& a : atoms) {
    if (a.is_zero() || !a.visibly_nonneg())
      throw InternalError("gadget atom is not visibly positive");
  }
}

/// Appends an even cofactor to a piece unless it is the constant 1.
void push_cofactor(Builder& b, Piece& piece, const Polynomial& even,
                   unsigned copies = 1) {
  if (copies == 0 || even == poly_one()) return;
  const std::size_t ref = pool_even_sos(b, even);
  for (unsigned i = 0; i < copies; ++i) piece.cofactors.push_back(ref);
}

/// Appends a plain polynomial factor to an ideal term unless trivial.
void push_eq_factor(Builder& b, EqTerm& eq, const Polynomial& factor,
                    unsigned copies = 1) {
  if (copies == 0 || factor == poly_one()) return;
  const std::size_t ref = b.pool(factor);
  for (unsigned i = 0; i < copies; ++i) eq.polys.push_back(ref);
}

Fragment trivial_fragment(const Polynomial& lhs, const Polynomial& rhs) {
  Fragment frag;
  frag.lhs = lhs;
  frag.rhs = rhs;
  frag.trace = {"equality"};
  return frag;
}

std::string stage_note(const char* label, long s1, long s2, long s) {
  return std::string(label) + "(" + std::to_string(s1) + "," +
         std::to_string(s2) + "," + std::to_string(s) + ")";
}

/// Balanced case s1 == s2 == t, s = 2t: with Z = sum a^t b^t the Lagrange
/// identity gives X Y - Z^2 = Q (a sum of cross squares), and the even
/// telescope turns it into
///   X^t Y^t - Z^s = Q * sum_{i<t} (X Y)^i Z^{2(t-1-i)}.
Fragment emit_pair_balanced(Builder& b, long t,
                            const std::vector<Polynomial>& atoms_a,
                            const std::vector<Polynomial>& atoms_b,
                            const Polynomial& x_norm,
                            const Polynomial& y_norm) {
  const long s = 2 * t;
  const std::size_t n = atoms_a.size();
  Polynomial z;
  std::vector<Polynomial> f(n), g(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = atoms_a[i].pow(static_cast<unsigned>(t));
    g[i] = atoms_b[i].pow(static_cast<unsigned>(t));
    z += f[i] * g[i];
  }

  Fragment frag;
  frag.rhs = x_norm.pow(static_cast<unsigned>(t)) *
             y_norm.pow(static_cast<unsigned>(t));
  frag.lhs = z.pow(static_cast<unsigned>(s));
  frag.trace = {stage_note("stage", t, t, s), "cauchy-schwarz"};
  if (frag.rhs == frag.lhs) return frag;

  const Polynomial xy = x_norm * y_norm;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      const Polynomial base = f[x] * g[y] - f[y] * g[x];
      if (base.is_zero()) continue;
      for (long i = 0; i < t; ++i) {
        Piece piece;
        piece.squares.push_back(b.pool(base));
        const unsigned zp = static_cast<unsigned>(t - 1 - i);
        if (zp > 0) piece.squares.push_back(b.pool(z.pow(zp)));
        push_cofactor(b, piece, xy, static_cast<unsigned>(i));
        frag.pieces.push_back(std::move(piece));
      }
    }
  }
  return frag;
}

/// One splitting stage of the dyadic path.  For s2 > s/2 the index terms
/// factor as a^{s1} b^{s2} = (a^{s1} b^{s2-s/2}) * b^{s/2}, so Cauchy-
/// Schwarz bounds Z^2 by Z' Y with Z' the sum for the pair (2 s1, 2 s2 - s).
/// Multiplying the claim by M = X^{s1} Y^{s2} + Z^s gives the exact
/// difference of squares
///   M (X^{s1} Y^{s2} - Z^s) = Y^s C' + Q * sum_i (Z' Y)^i Z^{2(s-1-i)}
/// with C' the next stage's claim; the mirror case s1 > s/2 swaps sides.
Fragment emit_pair_dyadic(Builder& b, long s1, long s2,
                          const std::vector<Polynomial>& atoms_a,
                          const std::vector<Polynomial>& atoms_b,
                          const Polynomial& x_norm, const Polynomial& y_norm,
                          int depth) {
  if (s1 == s2)
    return emit_pair_balanced(b, s1, atoms_a, atoms_b, x_norm, y_norm);
  if (depth > 64) throw InternalError("dyadic splitting failed to terminate");

  const long s = s1 + s2;
  const long t = s / 2;
  const bool split_right = s2 > t;
  const std::size_t n = atoms_a.size();

  std::vector<Polynomial> f(n), g(n);
  Polynomial z, z_next;
  for (std::size_t i = 0; i < n; ++i) {
    if (split_right) {
      f[i] = atoms_a[i].pow(static_cast<unsigned>(s1)) *
             atoms_b[i].pow(static_cast<unsigned>(s2 - t));
      g[i] = atoms_b[i].pow(static_cast<unsigned>(t));
    } else {
      f[i] = atoms_b[i].pow(static_cast<unsigned>(s2)) *
             atoms_a[i].pow(static_cast<unsigned>(s1 - t));
      g[i] = atoms_a[i].pow(static_cast<unsigned>(t));
    }
    z += f[i] * g[i];
    z_next += f[i] * f[i];
  }

  const long n1 = split_right ? 2 * s1 : 2 * s1 - s;
  const long n2 = split_right ? 2 * s2 - s : 2 * s2;
  Fragment inner =
      emit_pair_dyadic(b, n1, n2, atoms_a, atoms_b, x_norm, y_norm, depth + 1);
  if (inner.lhs != z_next.pow(static_cast<unsigned>(s)))
    throw InternalError("dyadic stage does not match the inner claim");

  Fragment frag;
  frag.rhs = x_norm.pow(static_cast<unsigned>(s1)) *
             y_norm.pow(static_cast<unsigned>(s2));
  frag.lhs = z.pow(static_cast<unsigned>(s));
  frag.trace.push_back(stage_note("stage", s1, s2, s));
  frag.trace.insert(frag.trace.end(), inner.trace.begin(), inner.trace.end());

  // The half norm that multiplies the inner claim, as a square.
  const Polynomial& side = split_right ? y_norm : x_norm;
  const std::size_t side_half = b.pool(side.pow(static_cast<unsigned>(t)));

  frag.multiplier = inner.multiplier;
  frag.multiplier.push_back(
      pool_even_sos(b, frag.rhs + frag.lhs));  // M = X^{s1} Y^{s2} + Z^s

  for (Piece piece : inner.pieces) {
    piece.squares.push_back(side_half);
    frag.pieces.push_back(std::move(piece));
  }
  for (EqTerm eq : inner.eq_terms) {
    eq.polys.push_back(side_half);
    eq.polys.push_back(side_half);
    frag.eq_terms.push_back(std::move(eq));
  }

  const Polynomial link = z_next * side;  // Z'Y (or Z'X), even
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      const Polynomial base = f[x] * g[y] - f[y] * g[x];
      if (base.is_zero()) continue;
      for (long i = 0; i < s; ++i) {
        Piece piece;
        piece.squares.push_back(b.pool(base));
        const unsigned zp = static_cast<unsigned>(s - 1 - i);
        if (zp > 0) piece.squares.push_back(b.pool(z.pow(zp)));
        push_cofactor(b, piece, link, static_cast<unsigned>(i));
        for (std::size_t m : inner.multiplier) piece.cofactors.push_back(m);
        frag.pieces.push_back(std::move(piece));
      }
    }
  }
  return frag;
}

}  // namespace

std::size_t pool_even_sos(Builder& b, const Polynomial& even) {
  if (even.is_zero() || !even.visibly_nonneg())
    throw InternalError("even factor is not visibly positive");
  SosExpr sos;
  for (const auto& [mono, coeff] : even.sorted_terms())
    sos.add(coeff, Polynomial::monomial(sqrt_monomial(mono)));
  return b.pool_sos(sos);
}

long amgm_coefficient(long s1, long s2, long j) {
  if (s1 < 1 || s2 < 1 || j < 0 || j > s1 + s2 - 2)
    throw DomainError("AM-GM coefficient index out of range");
  return std::min(s1 * (j + 1), s2 * (s1 + s2 - 1 - j));
}

polyring::Var amgm_var_left() { return polyring::aux_var(0, "u"); }
polyring::Var amgm_var_right() { return polyring::aux_var(0, "v"); }

polyring::SosExpr prove_amgm_binary(long s1, long s2) {
  if (s1 < 1 || s2 < 1)
    throw DomainError("AM-GM weights must be positive integers");
  const long s = s1 + s2;
  const Var u = amgm_var_left();
  const Var v = amgm_var_right();
  const Polynomial diff = Polynomial::monomial(Monomial::variable(u, 2)) -
                          Polynomial::monomial(Monomial::variable(v, 2));
  SosExpr sos;
  for (long j = 0; j <= s - 2; ++j) {
    Monomial lead;
    if (s - 2 - j > 0)
      lead = lead.times(Monomial::variable(u, static_cast<unsigned>(s - 2 - j)));
    if (j > 0) lead = lead.times(Monomial::variable(v, static_cast<unsigned>(j)));
    sos.add(Rational(amgm_coefficient(s1, s2, j)),
            Polynomial::monomial(lead) * diff);
  }
  return sos;
}

Fragment emit_cauchy_schwarz(Builder& b, const std::vector<Polynomial>& f_terms,
                             const std::vector<Polynomial>& g_terms) {
  if (f_terms.size() != g_terms.size())
    throw DomainError("factor term lists must have equal length");
  if (f_terms.empty()) throw DomainError("factor term lists must be non-empty");

  Polynomial ff, gg, fg;
  for (std::size_t i = 0; i < f_terms.size(); ++i) {
    ff += f_terms[i] * f_terms[i];
    gg += g_terms[i] * g_terms[i];
    fg += f_terms[i] * g_terms[i];
  }

  Fragment frag;
  frag.rhs = ff * gg;
  frag.lhs = fg * fg;
  frag.trace = {"cauchy-schwarz"};
  for (std::size_t x = 0; x < f_terms.size(); ++x) {
    for (std::size_t y = x + 1; y < f_terms.size(); ++y) {
      const Polynomial base = f_terms[x] * g_terms[y] - f_terms[y] * g_terms[x];
      if (base.is_zero()) continue;
      Piece piece;
      piece.squares.push_back(b.pool(base));
      frag.pieces.push_back(std::move(piece));
    }
  }
  return frag;
}

Fragment emit_pair_general(Builder& b, long s1, long s2,
                           const std::vector<Polynomial>& atoms_a,
                           const std::vector<Polynomial>& atoms_b,
                           int& aux_seq) {
  if (s1 < 1 || s2 < 1) throw InternalError("pair weights must be positive");
  check_atoms(atoms_a);
  check_atoms(atoms_b);
  if (atoms_a.size() != atoms_b.size())
    throw InternalError("pair atom lists must have equal length");

  const long s = s1 + s2;
  const std::size_t n = atoms_a.size();
  const Polynomial x_norm = poly_sum(pow_each(atoms_a, static_cast<unsigned>(s)));
  const Polynomial y_norm = poly_sum(pow_each(atoms_b, static_cast<unsigned>(s)));
  Polynomial z;
  for (std::size_t i = 0; i < n; ++i)
    z += atoms_a[i].pow(static_cast<unsigned>(s1)) *
         atoms_b[i].pow(static_cast<unsigned>(s2));

  Fragment frag;
  frag.rhs = x_norm.pow(static_cast<unsigned>(s1)) *
             y_norm.pow(static_cast<unsigned>(s2));
  frag.lhs = z.pow(static_cast<unsigned>(s));
  frag.trace = {stage_note("amgm", s1, s2, s)};
  if (frag.rhs == frag.lhs) return trivial_fragment(frag.lhs, frag.rhs);

  // Auxiliary 2s-th roots of the two norm sums.
  const Var xi = polyring::aux_var(aux_seq++, "hx");
  const Var eta = polyring::aux_var(aux_seq++, "hy");
  const std::size_t def_xi = b.define_aux(xi, 2 * s, x_norm);
  const std::size_t def_eta = b.define_aux(eta, 2 * s, y_norm);

  const Polynomial xi2s =
      Polynomial::monomial(Monomial::variable(xi, static_cast<unsigned>(2 * s)));
  const Polynomial eta2s = Polynomial::monomial(
      Monomial::variable(eta, static_cast<unsigned>(2 * s)));
  const Polynomial eta_sq = Polynomial::monomial(Monomial::variable(eta, 2));
  const Polynomial xi_sq = Polynomial::monomial(Monomial::variable(xi, 2));

  // K = xi^{2 s2} eta^{2 s1}; K^s is the single-monomial left multiplier.
  const Monomial k_root =
      Monomial::variable(xi, static_cast<unsigned>(s * s2))
          .times(Monomial::variable(eta, static_cast<unsigned>(s * s1)));
  SosExpr k_sos;
  k_sos.add(Rational(1), Polynomial::monomial(k_root));
  frag.multiplier = {b.pool_sos(k_sos)};

  const Polynomial k_poly = Polynomial::monomial(
      Monomial::variable(xi, static_cast<unsigned>(2 * s2))
          .times(Monomial::variable(eta, static_cast<unsigned>(2 * s1))));
  const Polynomial xy = x_norm * y_norm;
  const Polynomial kz = k_poly * z;

  // Pointwise AM-GM at (a eta^2, b xi^2), summed and telescoped by
  // W = sum_i (XY)^i (KZ)^{s-1-i}:
  //   K^s (X^{s1} Y^{s2} - Z^s)
  //     = (1/s) G W
  //       + D_xi [ rhs Y^{s1} sum_i X^i A^{s2-1-i} - (s2/s) Y W ]
  //       + D_eta [ rhs A^{s2} sum_i Y^i B^{s1-1-i} - (s1/s) X W ]
  // with A = xi^{2s}, B = eta^{2s} and D the defining equations.
  for (std::size_t x = 0; x < n; ++x) {
    const Polynomial u = atoms_a[x] * eta_sq;
    const Polynomial v = atoms_b[x] * xi_sq;
    const Polynomial diff = u - v;
    if (diff.is_zero()) continue;
    for (long j = 0; j <= s - 2; ++j) {
      const Rational scale =
          Rational(amgm_coefficient(s1, s2, j)) / Rational(s);
      const Polynomial even_part = u.pow(static_cast<unsigned>(s - 2 - j)) *
                                   v.pow(static_cast<unsigned>(j));
      for (long i = 0; i < s; ++i) {
        Piece piece;
        piece.scale = scale;
        piece.squares.push_back(b.pool(diff));
        push_cofactor(b, piece, even_part);
        push_cofactor(b, piece, xy, static_cast<unsigned>(i));
        push_cofactor(b, piece, kz, static_cast<unsigned>(s - 1 - i));
        frag.pieces.push_back(std::move(piece));
      }
    }
  }

  for (long i = 0; i < s2; ++i) {
    EqTerm eq;
    eq.aux = def_xi;
    eq.scale = Rational(1);
    push_eq_factor(b, eq, frag.rhs);
    push_eq_factor(b, eq, y_norm, static_cast<unsigned>(s1));
    push_eq_factor(b, eq, x_norm, static_cast<unsigned>(i));
    push_eq_factor(b, eq, xi2s, static_cast<unsigned>(s2 - 1 - i));
    frag.eq_terms.push_back(std::move(eq));
  }
  for (long i = 0; i < s1; ++i) {
    EqTerm eq;
    eq.aux = def_eta;
    eq.scale = Rational(1);
    push_eq_factor(b, eq, frag.rhs);
    push_eq_factor(b, eq, xi2s, static_cast<unsigned>(s2));
    push_eq_factor(b, eq, y_norm, static_cast<unsigned>(i));
    push_eq_factor(b, eq, eta2s, static_cast<unsigned>(s1 - 1 - i));
    frag.eq_terms.push_back(std::move(eq));
  }
  for (long i = 0; i < s; ++i) {
    EqTerm eq;
    eq.aux = def_xi;
    eq.scale = Rational(-s2) / Rational(s);
    push_eq_factor(b, eq, y_norm);
    push_eq_factor(b, eq, xy, static_cast<unsigned>(i));
    push_eq_factor(b, eq, kz, static_cast<unsigned>(s - 1 - i));
    frag.eq_terms.push_back(std::move(eq));
  }
  for (long i = 0; i < s; ++i) {
    EqTerm eq;
    eq.aux = def_eta;
    eq.scale = Rational(-s1) / Rational(s);
    push_eq_factor(b, eq, x_norm);
    push_eq_factor(b, eq, xy, static_cast<unsigned>(i));
    push_eq_factor(b, eq, kz, static_cast<unsigned>(s - 1 - i));
    frag.eq_terms.push_back(std::move(eq));
  }
  return frag;
}

Fragment emit_pair(Builder& b, long s1, long s2,
                   const std::vector<Polynomial>& atoms_a,
                   const std::vector<Polynomial>& atoms_b, int& aux_seq) {
  if (s1 < 1 || s2 < 1) throw InternalError("pair weights must be positive");
  check_atoms(atoms_a);
  check_atoms(atoms_b);
  if (atoms_a.size() != atoms_b.size())
    throw InternalError("pair atom lists must have equal length");

  const long s = s1 + s2;
  const Polynomial x_norm = poly_sum(pow_each(atoms_a, static_cast<unsigned>(s)));
  const Polynomial y_norm = poly_sum(pow_each(atoms_b, static_cast<unsigned>(s)));

  if (s1 == s2) {
    Fragment frag =
        emit_pair_balanced(b, s1, atoms_a, atoms_b, x_norm, y_norm);
    if (frag.rhs == frag.lhs && frag.pieces.empty())
      return trivial_fragment(frag.lhs, frag.rhs);
    return frag;
  }
  if ((s & (s - 1)) == 0) {
    Fragment frag =
        emit_pair_dyadic(b, s1, s2, atoms_a, atoms_b, x_norm, y_norm, 0);
    if (frag.rhs == frag.lhs) return trivial_fragment(frag.lhs, frag.rhs);
    return frag;
  }
  return emit_pair_general(b, s1, s2, atoms_a, atoms_b, aux_seq);
}

Fragment emit_norm_monotone(Builder& b, long sigma, long s,
                            const std::vector<Polynomial>& atoms,
                            int& aux_seq) {
  if (s < 1 || sigma <= s)
    throw InternalError("norm monotonicity needs sigma > s >= 1");
  check_atoms(atoms);

  const long d = sigma - s;
  const std::size_t n = atoms.size();
  const Polynomial x_norm = poly_sum(pow_each(atoms, static_cast<unsigned>(s)));
  const Polynomial z = poly_sum(pow_each(atoms, static_cast<unsigned>(sigma)));

  Fragment frag;
  frag.rhs = x_norm.pow(static_cast<unsigned>(sigma));
  frag.lhs = z.pow(static_cast<unsigned>(s));
  frag.trace = {stage_note("norm-monotone", sigma, s, d)};
  if (frag.rhs == frag.lhs) return trivial_fragment(frag.lhs, frag.rhs);

  const Var omega = polyring::aux_var(aux_seq++, "nm");
  const std::size_t def_omega = b.define_aux(omega, 2 * s, x_norm);
  const Polynomial omega_sq =
      Polynomial::monomial(Monomial::variable(omega, 2));
  const Polynomial p_bound = omega_sq.pow(static_cast<unsigned>(d)) * x_norm;

  // Per-point telescopes: T_y carries (omega^2 - a_y) up to the 2s-th
  // power, U_y up to the 2d-th.  With R_y = sum_{z != y} a_z^s and
  // S* = prod_y T_y the exact identity is
  //   S* (X^sigma - Z^s)
  //     = sum_{y,i} a_y^s U_y R_y (prod_{z != y} T_z) P^i Z^{s-1-i}
  //       + D_omega [ sum_{y,i} a_y^s U_y (prod_{z != y} T_z) P^i Z^{s-1-i}
  //                   - S* X^s sum_{i<d} X^i omega^{2s(d-1-i)} ]
  // with P = omega^{2d} X and D_omega = omega^{2s} - X.
  std::vector<Polynomial> t_scope(n), u_scope(n), rest(n);
  for (std::size_t y = 0; y < n; ++y) {
    Polynomial t_poly, u_poly;
    for (long i = 0; i < s; ++i)
      t_poly += omega_sq.pow(static_cast<unsigned>(i)) *
                atoms[y].pow(static_cast<unsigned>(s - 1 - i));
    for (long i = 0; i < d; ++i)
      u_poly += omega_sq.pow(static_cast<unsigned>(i)) *
                atoms[y].pow(static_cast<unsigned>(d - 1 - i));
    t_scope[y] = t_poly;
    u_scope[y] = u_poly;
    for (std::size_t zi = 0; zi < n; ++zi)
      if (zi != y) rest[y] += atoms[zi].pow(static_cast<unsigned>(s));
  }

  for (std::size_t y = 0; y < n; ++y) {
    if (t_scope[y] == poly_one()) continue;
    frag.multiplier.push_back(pool_even_sos(b, t_scope[y]));
  }

  for (std::size_t y = 0; y < n; ++y) {
    if (rest[y].is_zero()) continue;
    for (long i = 0; i < s; ++i) {
      Piece piece;
      push_cofactor(b, piece, atoms[y].pow(static_cast<unsigned>(s)));
      push_cofactor(b, piece, u_scope[y]);
      push_cofactor(b, piece, rest[y]);
      for (std::size_t zi = 0; zi < n; ++zi)
        if (zi != y) push_cofactor(b, piece, t_scope[zi]);
      push_cofactor(b, piece, p_bound, static_cast<unsigned>(i));
      push_cofactor(b, piece, z, static_cast<unsigned>(s - 1 - i));
      frag.pieces.push_back(std::move(piece));
    }
  }

  for (std::size_t y = 0; y < n; ++y) {
    for (long i = 0; i < s; ++i) {
      EqTerm eq;
      eq.aux = def_omega;
      eq.scale = Rational(1);
      push_eq_factor(b, eq, atoms[y].pow(static_cast<unsigned>(s)));
      push_eq_factor(b, eq, u_scope[y]);
      for (std::size_t zi = 0; zi < n; ++zi)
        if (zi != y) push_eq_factor(b, eq, t_scope[zi]);
      push_eq_factor(b, eq, p_bound, static_cast<unsigned>(i));
      push_eq_factor(b, eq, z, static_cast<unsigned>(s - 1 - i));
      frag.eq_terms.push_back(std::move(eq));
    }
  }
  for (long i = 0; i < d; ++i) {
    EqTerm eq;
    eq.aux = def_omega;
    eq.scale = Rational(-1);
    for (std::size_t zi = 0; zi < n; ++zi)
      push_eq_factor(b, eq, t_scope[zi]);
    push_eq_factor(b, eq, x_norm, static_cast<unsigned>(s + i));
    push_eq_factor(
        b, eq,
        Polynomial::monomial(Monomial::variable(
            omega, static_cast<unsigned>(2 * s * (d - 1 - i)))));
    frag.eq_terms.push_back(std::move(eq));
  }
  return frag;
}

Fragment scale_fragment(Builder& b, const Fragment& fragment,
                        const Polynomial& even_factor) {
  if (even_factor == poly_one()) return fragment;
  if (even_factor.is_zero() || !even_factor.visibly_nonneg())
    throw InternalError("fragment scale factor is not visibly positive");
  Fragment out = fragment;
  out.lhs = fragment.lhs * even_factor;
  out.rhs = fragment.rhs * even_factor;
  const std::size_t sos_ref = pool_even_sos(b, even_factor);
  const std::size_t poly_ref = b.pool(even_factor);
  for (Piece& piece : out.pieces) piece.cofactors.push_back(sos_ref);
  for (EqTerm& eq : out.eq_terms) eq.polys.push_back(poly_ref);
  return out;
}

Fragment compose_chain(Builder& b, const Fragment& upper,
                       const Fragment& lower) {
  (void)b;
  if (upper.lhs != lower.rhs)
    throw InternalError("fragment chain does not meet in the middle");
  Fragment out;
  out.rhs = upper.rhs;
  out.lhs = lower.lhs;
  out.multiplier = upper.multiplier;
  out.multiplier.insert(out.multiplier.end(), lower.multiplier.begin(),
                        lower.multiplier.end());
  for (Piece piece : upper.pieces) {
    for (std::size_t m : lower.multiplier) piece.cofactors.push_back(m);
    out.pieces.push_back(std::move(piece));
  }
  for (Piece piece : lower.pieces) {
    for (std::size_t m : upper.multiplier) piece.cofactors.push_back(m);
    out.pieces.push_back(std::move(piece));
  }
  for (EqTerm eq : upper.eq_terms) {
    for (std::size_t m : lower.multiplier) eq.cofactors.push_back(m);
    out.eq_terms.push_back(std::move(eq));
  }
  for (EqTerm eq : lower.eq_terms) {
    for (std::size_t m : upper.multiplier) eq.cofactors.push_back(m);
    out.eq_terms.push_back(std::move(eq));
  }
  out.trace = upper.trace;
  out.trace.insert(out.trace.end(), lower.trace.begin(), lower.trace.end());
  return out;
}

Fragment emit_multi(Builder& b, const std::vector<long>& sigma,
                    const std::vector<std::vector<Polynomial>>& atoms,
                    int& aux_seq) {
  if (sigma.size() < 2) throw InternalError("multi fold needs two factors");
  if (sigma.size() != atoms.size())
    throw InternalError("multi weight and atom counts differ");
  for (long w : sigma)
    if (w < 1) throw InternalError("multi weights must be positive");

  if (sigma.size() == 2)
    return emit_pair(b, sigma[0], sigma[1], atoms[0], atoms[1], aux_seq);

  long total = 0;
  for (long w : sigma) total += w;
  const long tau = total - sigma[0];
  const std::size_t n = atoms[0].size();

  // Tail claim over atoms raised to this level's total weight.
  const std::vector<long> tail_sigma(sigma.begin() + 1, sigma.end());
  std::vector<std::vector<Polynomial>> tail_atoms;
  for (std::size_t i = 1; i < atoms.size(); ++i)
    tail_atoms.push_back(pow_each(atoms[i], static_cast<unsigned>(total)));
  const Fragment tail = emit_multi(b, tail_sigma, tail_atoms, aux_seq);

  // The fold scale is read off the tail claim: its lhs is the tau-th power
  // of the tail product sum at scale total * L.
  // Head pair at (sigma_0, tau) over (a_0^{tau L}, tail_product^L), where
  // the tail product is prod_{i>=1} a_i^{sigma_i}.
  std::vector<Polynomial> tail_product(n, Polynomial(Rational(1)));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t i = 1; i < atoms.size(); ++i)
      tail_product[x] *= atoms[i][x].pow(static_cast<unsigned>(sigma[i]));

  // Recover L by matching exponents: the tail rhs equals
  // prod_{i>=1} (sum a_i^{total tau L})^{sigma_i}; compute L from the
  // recursion instead of inspecting polynomials.
  long scale = 1;
  {
    std::vector<long> rest(sigma.begin() + 1, sigma.end());
    while (rest.size() > 2) {
      long rest_total = 0;
      for (long w : rest) rest_total += w;
      scale *= rest_total - rest[0];
      rest.erase(rest.begin());
    }
  }

  std::vector<Polynomial> head_a =
      pow_each(atoms[0], static_cast<unsigned>(tau * scale));
  std::vector<Polynomial> head_b =
      pow_each(tail_product, static_cast<unsigned>(scale));
  Fragment head = emit_pair(b, sigma[0], tau, head_a, head_b, aux_seq);

  Polynomial head_norm;
  for (std::size_t x = 0; x < n; ++x)
    head_norm += atoms[0][x].pow(static_cast<unsigned>(total * tau * scale));
  Fragment upper =
      scale_fragment(b, tail, head_norm.pow(static_cast<unsigned>(sigma[0])));

  Fragment out = compose_chain(b, upper, head);
  out.trace.insert(out.trace.begin(),
                   stage_note("fold", sigma[0], tau, total));
  return out;
}

namespace {

/// Shared wrapper: builds a free-form certificate around one fragment.
Certificate seal_fragment(Builder& b, const Fragment& frag) {
  b.set_target(frag.rhs - frag.lhs);
  b.conclude(frag.multiplier, frag.pieces, frag.eq_terms, frag.trace);
  return b.take();
}

void check_terms_monomial(const std::vector<Polynomial>& terms) {
  if (terms.empty()) throw DomainError("factor term lists must be non-empty");
  for (const Polynomial& t : terms)
    if (t.is_zero() || t.term_count() != 1)
      throw DomainError("factor terms must be nonzero monomials");
}

std::vector<Polynomial> square_terms(const std::vector<Polynomial>& terms) {
  std::vector<Polynomial> atoms;
  atoms.reserve(terms.size());
  for (const Polynomial& t : terms) atoms.push_back(t * t);
  return atoms;
}

std::pair<long, long> exponent_pair(const Rational& p) {
  if (!(p > Rational(0)) || !(p < Rational(1)))
    throw DomainError("pair exponent must lie strictly between 0 and 1");
  const Rational reduced = p;  // mpq_class keeps canonical form
  if (reduced.get_den() > 64)
    throw DomainError("exponent denominator exceeds 64");
  const long s = reduced.get_den().get_si();
  const long s1 = reduced.get_num().get_si();
  return {s1, s - s1};
}

}  // namespace

Certificate prove_cauchy_schwarz(const std::vector<Polynomial>& f_terms,
                                 const std::vector<Polynomial>& g_terms) {
  Builder b{CertKind::FreeForm};
  const Fragment frag = emit_cauchy_schwarz(b, f_terms, g_terms);
  return seal_fragment(b, frag);
}

Certificate prove_holder_pair(const HolderTask& task) {
  const auto [s1, s2] = exponent_pair(task.p);
  if (task.f_terms.size() != task.g_terms.size())
    throw DomainError("factor term lists must have equal length");
  check_terms_monomial(task.f_terms);
  check_terms_monomial(task.g_terms);

  Builder b{CertKind::FreeForm};
  int aux_seq = 0;
  const Fragment frag = emit_pair(b, s1, s2, square_terms(task.f_terms),
                                  square_terms(task.g_terms), aux_seq);
  return seal_fragment(b, frag);
}

Certificate prove_holder_multi(
    const std::vector<Rational>& weights,
    const std::vector<std::vector<Polynomial>>& factors) {
  if (weights.size() < 2)
    throw DomainError("multi-factor proof needs at least two factors");
  if (weights.size() != factors.size())
    throw DomainError("weight and factor counts differ");

  Rational sum(0);
  for (const Rational& w : weights) {
    if (!(w > Rational(0)) || !(w < Rational(1)))
      throw DomainError("factor weights must lie strictly between 0 and 1");
    sum += w;
  }
  if (sum != Rational(1)) throw DomainError("factor weights must sum to 1");

  const std::size_t n = factors.front().size();
  for (const auto& terms : factors) {
    check_terms_monomial(terms);
    if (terms.size() != n)
      throw DomainError("factor term lists must have equal length");
  }

  mpz_class lcd(1);
  for (const Rational& w : weights)
    mpz_lcm(lcd.get_mpz_t(), lcd.get_mpz_t(), w.get_den().get_mpz_t());
  if (lcd > 64) throw DomainError("exponent denominator exceeds 64");
  const long total = lcd.get_si();

  std::vector<long> sigma;
  sigma.reserve(weights.size());
  for (const Rational& w : weights) {
    const Rational scaled = w * Rational(total);
    sigma.push_back(scaled.get_num().get_si());
  }

  std::vector<std::vector<Polynomial>> atoms;
  atoms.reserve(factors.size());
  for (const auto& terms : factors) atoms.push_back(square_terms(terms));

  Builder b{CertKind::FreeForm};
  int aux_seq = 0;
  const Fragment frag = emit_multi(b, sigma, atoms, aux_seq);
  return seal_fragment(b, frag);
}

Certificate prove_norm_monotone(const Rational& p,
                                const std::vector<Polynomial>& f_terms) {
  if (!(p > Rational(1))) throw DomainError("norm exponent must exceed 1");
  if (p.get_den() > 64) throw DomainError("exponent denominator exceeds 64");
  if (p.get_num() > 64)
    throw DomainError("norm exponent exceeds the supported range");
  const long sigma = p.get_num().get_si();
  const long s = p.get_den().get_si();
  check_terms_monomial(f_terms);

  Builder b{CertKind::FreeForm};
  int aux_seq = 0;
  const Fragment frag =
      emit_norm_monotone(b, sigma, s, square_terms(f_terms), aux_seq);
  return seal_fragment(b, frag);
}

}  // namespace blsos::holder
