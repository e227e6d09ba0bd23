#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blsos/exactalg.hpp"

namespace blsos::polyring {

using exactalg::Rational;

/// Exact rational power with a nonnegative integer exponent.
Rational rational_pow(const Rational& base, unsigned long exp);

/// Variable families.  FuncRoot(j, y) is the variable F_j(y) whose square
/// encodes the nonnegative function value f_j(y); Aux variables are
/// prover-introduced roots and quotient-instance functions; Slack variables
/// encode sup-norm bounds.
enum class VarFamily : std::uint8_t { FuncRoot = 0, Aux = 1, Slack = 2 };

/// The semantic identity of a variable.  The default ordering (family,
/// index, point, tag) is the canonical variable order used for
/// serialization, so certificate text is identical across runs.
struct VarId {
  VarFamily family = VarFamily::Aux;
  int index = 0;
  std::vector<long> point;
  std::string tag;

  auto operator<=>(const VarId&) const = default;
};

/// A cheap interned handle to a VarId.  Handles compare by identity; the
/// canonical order lives in `semantic_rank`, which is recomputed lazily
/// whenever new variables have been interned.
class Var {
 public:
  Var() = default;

  static Var intern(const VarId& id);

  const VarId& id() const;
  std::uint32_t raw() const { return raw_; }
  /// Position of this variable in the canonical (VarId) order over all
  /// currently interned variables.
  std::uint32_t semantic_rank() const;

  bool operator==(const Var&) const = default;

 private:
  explicit Var(std::uint32_t raw) : raw_(raw) {}
  std::uint32_t raw_ = 0;
};

struct VarHash {
  std::size_t operator()(const Var& v) const {
    return std::hash<std::uint32_t>{}(v.raw());
  }
};

Var func_root(int j, const std::vector<long>& point);
Var aux_var(int j, const std::string& tag, const std::vector<long>& point = {});
Var slack_var(int j, const std::string& tag = {});

/// Canonical textual name of a variable: "F<j>(p1,...,pk)" for function
/// roots, "a<j>.<tag>" (optionally with a point list) for auxiliaries, and
/// "t<j>" or "t<j>.<tag>" for slacks.
std::string var_to_string(Var v);
/// Parses a canonical variable name; throws ParseError on malformed input.
Var var_from_string(const std::string& text);

/// A power product of variables; factors are kept sorted by handle with
/// strictly positive exponents, so equality and hashing are structural.
class Monomial {
 public:
  Monomial() = default;

  static Monomial variable(Var v, unsigned exp = 1);

  const std::vector<std::pair<Var, unsigned>>& factors() const {
    return factors_;
  }
  bool is_unit() const { return factors_.empty(); }
  unsigned exponent_of(Var v) const;
  unsigned total_degree() const;
  bool all_exponents_even() const;

  Monomial times(const Monomial& other) const;
  Monomial pow(unsigned k) const;

  bool operator==(const Monomial&) const = default;

  /// Canonical graded-lexicographic order (total degree first, then the
  /// canonical variable order), used only where output must be stable.
  static bool graded_lex_less(const Monomial& a, const Monomial& b);

 private:
  std::vector<std::pair<Var, unsigned>> factors_;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const;
};

/// Variable assignment for exact evaluation.
using Assignment = std::unordered_map<Var, Rational, VarHash>;

/// Substitution table mapping variables to replacement polynomials.
class Polynomial;
using SubstitutionTable = std::unordered_map<Var, Polynomial, VarHash>;

/// A sparse multivariate polynomial over the rationals.  Terms live in an
/// unordered table with nonzero coefficients; the canonical term order is
/// applied on demand (serialization, leading terms).
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(const Rational& constant);
  explicit Polynomial(long constant);

  static Polynomial variable(Var v);
  static Polynomial monomial(Monomial m, Rational coeff = Rational(1));

  bool is_zero() const { return terms_.empty(); }
  std::size_t term_count() const { return terms_.size(); }
  /// Maximum total degree over terms; 0 for the zero polynomial.
  unsigned total_degree() const;

  const std::unordered_map<Monomial, Rational, MonomialHash>& terms() const {
    return terms_;
  }
  Rational coefficient(const Monomial& m) const;
  /// Terms in descending canonical (graded-lex) order.
  std::vector<std::pair<Monomial, Rational>> sorted_terms() const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(const Rational& scalar);
  Polynomial& operator*=(const Polynomial& other);
  Polynomial operator-() const;

  friend Polynomial operator+(Polynomial a, const Polynomial& b) {
    a += b;
    return a;
  }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) {
    a -= b;
    return a;
  }
  friend Polynomial operator*(Polynomial a, const Polynomial& b) {
    a *= b;
    return a;
  }
  friend Polynomial operator*(Polynomial a, const Rational& s) {
    a *= s;
    return a;
  }
  friend Polynomial operator*(const Rational& s, Polynomial a) {
    a *= s;
    return a;
  }

  Polynomial pow(unsigned k) const;

  /// Adds c·m to this polynomial in place.
  void add_term(const Monomial& m, const Rational& c);

  bool operator==(const Polynomial& other) const {
    return terms_ == other.terms_;
  }
  bool operator!=(const Polynomial& other) const { return !(*this == other); }

  /// Exact evaluation; throws DomainError when a variable is unassigned.
  Rational evaluate(const Assignment& values) const;

  /// Substitutes table entries for variables (missing variables stay).
  Polynomial substitute(const SubstitutionTable& table) const;

  /// True when every coefficient is positive and every monomial has all
  /// exponents even — such a polynomial is visibly nonnegative everywhere
  /// and strictly positive wherever all its variables are nonzero.  The
  /// zero polynomial qualifies (vacuously).
  bool visibly_nonneg() const;

  /// Canonical textual form; see the certificate format documentation.
  std::string str() const;
  /// Parses the canonical textual form.  Throws ParseError with a position
  /// diagnostic on malformed input.
  static Polynomial parse(const std::string& text);

 private:
  std::unordered_map<Monomial, Rational, MonomialHash> terms_;
};

/// One weighted square: contributes coeff · base² with coeff > 0.
struct SosEntry {
  Rational coeff;
  Polynomial base;
};

/// A weighted sum of squares Σ coeff_i · base_i²; the weights are positive
/// rationals so the expansion is nonnegative at every real point.
class SosExpr {
 public:
  SosExpr() = default;

  /// Appends coeff·base²; throws DomainError unless coeff > 0.
  void add(Rational coeff, Polynomial base);

  const std::vector<SosEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  Polynomial expand() const;
  /// Degree of the expansion per the accumulation rules (2·max deg base),
  /// without expanding.
  unsigned accounted_degree() const;

 private:
  std::vector<SosEntry> entries_;
};

}  // namespace blsos::polyring
