#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blsos/datum.hpp"
#include "blsos/exactalg.hpp"
#include "blsos/polyring.hpp"

namespace blsos::certificate {

using exactalg::Rational;
using polyring::Polynomial;

/// Format tag written into every certificate file.
inline constexpr const char* kFormatTag = "blsos-cert-1";

/// Deduction step kinds.  The claim-producing kinds derive nonnegative
/// polynomials from squares and declared hypotheses; DEFINE_AUX adjoins a
/// defining equation for a fresh auxiliary variable; CONCLUDE states the
/// final identity and must be the last step.
enum class StepKind {
  Square,
  Hypothesis,
  Add,
  Mul,
  ScalarMul,
  Substitute,
  DefineAux,
  Conclude,
};

/// Canonical file names of the step kinds (SQUARE, HYPOTHESIS, ADD, MUL,
/// SCALAR_MUL, SUBSTITUTE, DEFINE_AUX, CONCLUDE).
std::string step_kind_name(StepKind kind);
StepKind step_kind_from_name(const std::string& name);

/// True for kinds that derive a claimed nonnegative polynomial.
bool is_claim_kind(StepKind kind);

/// A named nonnegative assumption.  Instance certificates may declare only
/// the canonical sup-norm caps t_j^2 - F_j(y)^2 of indices with s_j = 0.
struct Hypothesis {
  std::string name;
  Polynomial poly;
};

/// One weighted square: contributes coeff * pools[base]^2, coeff > 0.
struct WeightedSquareRef {
  Rational coeff{1};
  std::size_t base = 0;
};

/// A weighted sum of squares stored by pool reference.
using SosRef = std::vector<WeightedSquareRef>;

/// One substitution binding: variable := pools[value].
struct SubstitutionPair {
  polyring::Var var;
  std::size_t value = 0;
};

/// One product term of the witness side:
///   scale * prod pools[squares]^2 * prod sos * prod hyps * prod claims.
/// Every factor is nonnegative wherever the hypotheses hold, so the sum of
/// pieces witnesses nonnegativity of the multiplied target.
struct Piece {
  Rational scale{1};
  std::vector<std::size_t> squares;     ///< pool refs, squared on expansion
  std::vector<std::size_t> cofactors;   ///< sos pool refs
  std::vector<std::size_t> hypotheses;  ///< hypothesis table indices
  std::vector<std::size_t> claims;      ///< refs to claim-producing steps
};

/// One ideal term: scale * prod pools[polys] * prod sos * (v^power - rhs)
/// for the referenced DEFINE_AUX equation; identically zero wherever the
/// auxiliary definitions hold, so it may enter the identity with any sign.
struct EqTerm {
  std::size_t aux = 0;  ///< DEFINE_AUX step index
  Rational scale{1};    ///< nonzero, either sign
  std::vector<std::size_t> polys;      ///< pool refs (plain factors)
  std::vector<std::size_t> cofactors;  ///< sos pool refs
};

struct Step {
  StepKind kind = StepKind::Square;
  std::size_t base = 0;  ///< Square: squared base pool; DefineAux: rhs pool
  std::string name;      ///< Hypothesis name; DefineAux variable name
  std::size_t lhs = 0;   ///< Add/Mul left operand step
  std::size_t rhs = 0;   ///< Add/Mul right operand step
  std::size_t arg = 0;   ///< ScalarMul/Substitute operand step
  Rational scalar{1};    ///< ScalarMul factor (positive)
  std::vector<SubstitutionPair> table;  ///< Substitute bindings
  long power = 0;        ///< DefineAux: var^power = pools[base]
  std::size_t claim = 0; ///< pool ref of the claimed polynomial

  // CONCLUDE payload.
  std::vector<std::size_t> s1;  ///< sos refs: factors of the left multiplier
  std::vector<Piece> pieces;
  std::vector<EqTerm> eq_terms;
  std::vector<std::string> trace;  ///< human-readable provenance, unverified
};

enum class CertKind { BlInstance, FreeForm };

/// The proof object.  An instance certificate pins its datum by digest and
/// rebuilds the target from (datum, lift); a free-form certificate carries
/// its target polynomial and may not declare hypotheses.
struct Certificate {
  CertKind kind = CertKind::FreeForm;

  std::string datum_digest;  ///< BlInstance
  long s = 1;                ///< BlInstance: common exponent denominator
  std::vector<long> s_list;  ///< BlInstance: numerators s_j = p_j s
  long lift = 1;             ///< BlInstance: root lift of the encoding
  std::vector<Hypothesis> hypotheses;  ///< BlInstance sup-norm caps

  Polynomial target;  ///< FreeForm

  std::vector<Polynomial> pools;
  std::vector<SosRef> sos_pool;
  std::vector<Step> steps;
};

/// Degree accounting: per-step degrees from the accumulation rules
/// (ADD takes the max, MUL the sum, SQUARE doubles), the instance bound,
/// and the slack-scaled comparison.
struct DegreeReport {
  long max_degree = 0;
  std::vector<long> step_degrees;
  long theorem_bound = 0;  ///< 0 when no instance bound applies (free form)
  Rational slack_factor{8};
  bool within_bound = true;
};

struct VerifyOptions {
  Rational slack_factor{8};
};

/// ACCEPT carries the degree report; REJECT carries the first failing step
/// (== steps.size() for certificate-level failures), a reason, and the
/// leading term of the nonzero residual for identity failures.
struct VerifyOutcome {
  bool accepted = false;
  DegreeReport report;
  std::size_t reject_step = 0;
  std::string reject_reason;
  std::string residual_leading_term;
};

/// ceil(n^m m^(m/2)) + s * sum(s_list): the instance degree bound.
long degree_bound(long n, long m, long s, const std::vector<long>& s_list);

/// Variables of the canonical instance encoding (1-based index j+1).
polyring::Var instance_root(std::size_t j, const std::vector<long>& y);
polyring::Var norm_cap_var(std::size_t j);

/// The canonical sup-norm cap hypothesis for index j at image point y.
std::string norm_cap_name(std::size_t j, const std::vector<long>& y);
Polynomial norm_cap_poly(std::size_t j, const std::vector<long>& y);

/// All admissible hypotheses of a datum: one cap per (j, y) with s_j = 0,
/// in index-then-point order.
std::vector<Hypothesis> canonical_hypotheses(const datum::BLDatum& d);

/// The homogenized target RHS^s - LHS^s of the instance inequality under
/// the encoding f_j(y) = F_{j+1}(y)^(2 lift s_j); indices with s_j = 0 use
/// exponent 2 lift and contribute the sup-norm factor t_{j+1}^(2 lift s).
Polynomial canonical_target(const datum::BLDatum& d, long lift);

/// Expansion of a pooled weighted-square list.
Polynomial expand_sos(const Certificate& cert, std::size_t index);

/// Replays the certificate against the datum-bound target.  Pure: consults
/// nothing about how the certificate was produced.
VerifyOutcome verify(const Certificate& cert, const datum::BLDatum& d,
                     const VerifyOptions& options = {});
/// Free-form verification (no datum; instance certificates are refused).
VerifyOutcome verify(const Certificate& cert,
                     const VerifyOptions& options = {});

/// Canonical file bytes (JSON).  serialize(deserialize(b)) == b for any b
/// produced by serialize.
std::string serialize(const Certificate& cert);
/// Parses and structurally validates certificate bytes; throws ParseError
/// with step diagnostics on malformed input.
Certificate deserialize(const std::string& bytes);

/// Incremental certificate assembly with structural pooling: equal
/// polynomials and weighted-square lists are interned once, and the claim
/// pool of every step is maintained automatically.  The builder checks
/// only structural sanity (index bounds, one CONCLUDE); semantic
/// admissibility is the verifier's job, so deliberately unsound
/// certificates can be assembled for testing.
class Builder {
 public:
  explicit Builder(CertKind kind);

  void bind_instance(const datum::BLDatum& d, long lift);
  void set_target(Polynomial target);
  std::size_t declare_hypothesis(std::string name, Polynomial poly);

  std::size_t pool(const Polynomial& p);
  std::size_t pool_sos(const polyring::SosExpr& sos);

  std::size_t square(const Polynomial& base);
  std::size_t hypothesis_step(std::size_t hyp_index);
  std::size_t add(std::size_t lhs, std::size_t rhs);
  std::size_t mul(std::size_t lhs, std::size_t rhs);
  std::size_t scalar_mul(std::size_t arg, const Rational& scalar);
  std::size_t substitute(
      std::size_t arg,
      std::vector<std::pair<polyring::Var, Polynomial>> table);
  std::size_t define_aux(polyring::Var var, long power,
                         const Polynomial& rhs);

  /// The replayed claim of a claim-producing step.
  const Polynomial& claim_of(std::size_t step) const;
  std::size_t step_count() const { return cert_.steps.size(); }
  std::size_t hypothesis_count() const { return cert_.hypotheses.size(); }

  void conclude(std::vector<std::size_t> s1, std::vector<Piece> pieces,
                std::vector<EqTerm> eq_terms,
                std::vector<std::string> trace = {});

  /// Finalizes and moves the certificate out; requires a CONCLUDE step.
  Certificate take();

 private:
  std::size_t require_claim_step(std::size_t step) const;
  std::size_t push_claim_step(Step step, Polynomial claim);

  Certificate cert_;
  std::unordered_map<std::string, std::size_t> pool_index_;
  std::unordered_map<std::string, std::size_t> sos_index_;
  std::unordered_map<std::string, std::size_t> hyp_index_;
  std::vector<Polynomial> claims_;
  bool concluded_ = false;
};

}  // namespace blsos::certificate
