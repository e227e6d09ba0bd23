#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "blsos/certificate.hpp"
#include "blsos/exactalg.hpp"
#include "blsos/polyring.hpp"

/// Certificate builders for the classical inequality gadgets that every
/// larger proof is assembled from: Cauchy–Schwarz, weighted binary AM–GM,
/// two-factor and multi-factor Hölder with rational exponents, and norm
/// monotonicity.  The gadgets come in two forms: *fragments*, which emit
/// their squares, multiplier factors, and auxiliary definitions into a
/// shared certificate builder so they can be composed into instance
/// proofs, and standalone provers, which wrap a single fragment into a
/// self-contained free-form certificate.
namespace blsos::holder {

using certificate::Certificate;
using exactalg::Rational;
using polyring::Polynomial;

/// A two-factor Hölder statement: exponents (p, 1-p) with 0 < p < 1 and
/// the two factor term lists indexed by the same finite set.  Terms must
/// be nonzero single-term polynomials; each term t represents the
/// nonnegative factor value t^2, so all certified targets are polynomial
/// statements with even exponents.
struct HolderTask {
  Rational p;
  std::vector<Polynomial> f_terms;
  std::vector<Polynomial> g_terms;
};

/// A partial proof emitted into a shared builder.  It certifies
///   (prod multiplier) * (rhs - lhs) == sum(pieces) + sum(eq_terms)
/// as an exact polynomial identity, where the multiplier entries are
/// positive-even sums of squares from the builder's pool.  Fragments
/// compose by chaining and by scaling with visibly nonnegative factors.
struct Fragment {
  Polynomial lhs;
  Polynomial rhs;
  std::vector<std::size_t> multiplier;  ///< sos pool refs (left factors)
  std::vector<certificate::Piece> pieces;
  std::vector<certificate::EqTerm> eq_terms;
  std::vector<std::string> trace;
};

/// Interns a visibly nonnegative polynomial as a weighted sum of squares
/// of half-exponent monomials.  Throws InternalError if the polynomial is
/// not visibly nonnegative.
std::size_t pool_even_sos(certificate::Builder& b, const Polynomial& even);

/// Coefficient c_j of the binary AM-GM decomposition
///   s1 x^s + s2 y^s - s x^{s1} y^{s2}
///     = sum_{j=0}^{s-2} c_j x^{s-2-j} y^j (x - y)^2,   s = s1 + s2,
/// namely min(s1 (j+1), s2 (s-1-j)) > 0.
long amgm_coefficient(long s1, long s2, long j);

/// The decomposition above instantiated at x = u^2, y = v^2 for the
/// canonical template variables u, v, so every term is a perfect square:
/// the expansion equals s1 u^{2s} + s2 v^{2s} - s u^{2 s1} v^{2 s2}.
polyring::SosExpr prove_amgm_binary(long s1, long s2);
polyring::Var amgm_var_left();
polyring::Var amgm_var_right();

/// Lagrange fragment: rhs = (sum f^2)(sum g^2), lhs = (sum f g)^2, no
/// multiplier, pieces are the cross squares (f_x g_y - f_y g_x)^2.
/// Terms may be arbitrary polynomials.
Fragment emit_cauchy_schwarz(certificate::Builder& b,
                             const std::vector<Polynomial>& f_terms,
                             const std::vector<Polynomial>& g_terms);

/// Two-factor Hölder fragment over visibly nonnegative atom lists:
///   rhs = X^{s1} Y^{s2},  lhs = Z^s
/// with X = sum a^s, Y = sum b^s, Z = sum a^{s1} b^{s2}, s = s1 + s2.
/// Dispatches to the balanced Cauchy–Schwarz telescope when s1 == s2, to
/// the recursive splitting when s is a power of two, and otherwise to the
/// AM-GM construction with auxiliary 2s-th roots (emit_pair_general).
/// aux_seq provides fresh auxiliary variable indices.
Fragment emit_pair(certificate::Builder& b, long s1, long s2,
                   const std::vector<Polynomial>& atoms_a,
                   const std::vector<Polynomial>& atoms_b, int& aux_seq);

/// The AM-GM construction usable for every s >= 2 (exposed separately so
/// the two paths can be cross-checked on dyadic exponents).
Fragment emit_pair_general(certificate::Builder& b, long s1, long s2,
                           const std::vector<Polynomial>& atoms_a,
                           const std::vector<Polynomial>& atoms_b,
                           int& aux_seq);

/// Norm monotonicity fragment for sigma > s >= 1 (coprime):
///   rhs = (sum a^s)^sigma,  lhs = (sum a^sigma)^s
/// over visibly nonnegative atoms, via an auxiliary 2s-th root of sum a^s.
Fragment emit_norm_monotone(certificate::Builder& b, long sigma, long s,
                            const std::vector<Polynomial>& atoms,
                            int& aux_seq);

/// Multi-factor Hölder fragment for integer weights sigma (sum S) over a
/// table atoms[i][x]: left-fold of pair fragments with tail atoms raised
/// to the fold scale, certifying
///   rhs = prod_i (sum_x atoms[i][x]^{S L})^{sigma_i},
///   lhs = (sum_x prod_i atoms[i][x]^{sigma_i L})^S
/// where L is the fold scale (a product of tail weights, 1 for k = 2).
Fragment emit_multi(certificate::Builder& b, const std::vector<long>& sigma,
                    const std::vector<std::vector<Polynomial>>& atoms,
                    int& aux_seq);

/// Multiplies both sides of a fragment by a visibly nonnegative factor.
Fragment scale_fragment(certificate::Builder& b, const Fragment& fragment,
                        const Polynomial& even_factor);

/// Chains upper (A >= B) with lower (B >= C) into A >= C; requires
/// upper.lhs == lower.rhs.
Fragment compose_chain(certificate::Builder& b, const Fragment& upper,
                       const Fragment& lower);

/// Standalone certificate for (sum f g)^2 <= (sum f^2)(sum g^2).
Certificate prove_cauchy_schwarz(const std::vector<Polynomial>& f_terms,
                                 const std::vector<Polynomial>& g_terms);

/// Standalone certificate for the homogenized two-factor Hölder
/// inequality of the task, with factor values encoded as term squares.
Certificate prove_holder_pair(const HolderTask& task);

/// Standalone certificate for homogenized multi-factor Hölder: weights in
/// (0,1) summing to 1, at least two factors, equal-length term lists.
Certificate prove_holder_multi(
    const std::vector<Rational>& weights,
    const std::vector<std::vector<Polynomial>>& factors);

/// Standalone certificate for norm monotonicity at exponent p > 1:
///   (sum t^{2 sigma})^s <= (sum t^{2 s})^sigma  with  p = sigma / s.
Certificate prove_norm_monotone(const Rational& p,
                                const std::vector<Polynomial>& f_terms);

}  // namespace blsos::holder
