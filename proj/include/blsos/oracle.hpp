#pragma once

/// Brute-force ground truth for the inequality engine: exact random
/// spot-checks of candidate instances, counterexample search for bad
/// exponent vectors, and pseudo-expectation (moment table) axiom checks.
/// Everything here is exact rational arithmetic; no tolerances.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <blsos/datum.hpp>
#include <blsos/exactalg.hpp>
#include <blsos/polyring.hpp>

namespace blsos::oracle {

using exactalg::Rational;

/// One candidate input to the inequality: `tables[j]` assigns each image
/// point of map j a nonnegative value of f_j.  The generators below only
/// produce perfect L-th powers (L = lcm of the positive exponent
/// numerators) so every fractional norm in the inequality is rational.
struct Assignment {
  std::vector<std::map<std::vector<long>, Rational>> tables;
};

/// lcm of the positive entries of s_list (1 when there are none); the
/// power structure required of assignment values.
long value_power(const datum::BLDatum& d);

/// Exact gap RHS^s - LHS^s of the inequality at `a` (both sides raised
/// to the common denominator s, which makes every norm polynomial in the
/// L-th roots of the values).  Negative iff `a` violates the inequality.
/// Throws DomainError when a table entry is missing, negative, or not a
/// perfect L-th power.
Rational inequality_gap(const datum::BLDatum& d, const Assignment& a);

struct CheckReport {
  long trials = 0;
  long violations = 0;
  /// Smallest gap seen across trials; meaningful only when trials > 0.
  Rational min_gap;
};

/// Evaluates `trials` pseudo-random assignments exactly and counts
/// violations.  Deterministic for a fixed seed: each trial derives its
/// own generator, so reports merge identically in any order.
CheckReport random_check(const datum::BLDatum& d, long trials,
                         std::uint64_t seed);

/// Searches for an exact counterexample.  Tries analytic families first
/// (indicators of sub-boxes [0,k)^n for k = 2,4,8,16, then the indicator
/// of an infeasibility-witness subspace when one exists), falling back
/// to a seeded random local search.  Returns the first violation found.
std::optional<Assignment> find_violation(const datum::BLDatum& d);

/// Pseudo-expectation table: the value of a candidate linear functional
/// on every canonical monomial up to `degree`.  Keys use the canonical
/// monomial rendering of `monomial_key` ("1" for the unit monomial,
/// otherwise space-separated variable powers such as "a0.x^2 a1.x").
struct MomentTable {
  long degree = 0;
  std::map<std::string, Rational> values;
};

/// Canonical table key for a monomial (variables in canonical order,
/// "^e" suffixes for exponents above one, "1" for the unit monomial).
std::string monomial_key(const polyring::Monomial& m);

/// Parses a table key; accepts variables in any order and normalizes.
/// Throws ParseError on malformed input.
polyring::Monomial monomial_from_key(const std::string& text);

struct PseudoOutcome {
  bool pass = true;
  /// On failure, the broken axiom: "normalization" or "positivity".
  std::string axiom;
  /// Positivity failures: the 1-based index (in the canonical monomial
  /// basis) of the monomial whose elimination step exposed the failure,
  /// the offending pivot value, and a rational direction v with
  /// <v, M v> = pivot < 0 over the same basis.
  std::size_t pivot_index = 0;
  Rational pivot;
  std::vector<Rational> witness;
};

/// Basis used by the positivity check: all monomials of degree <= bound
/// in the table's variables, sorted by degree then canonical key.
std::vector<polyring::Monomial> moment_basis(const MomentTable& table,
                                             long bound);

/// Checks the pseudo-expectation axioms at degree d: normalization
/// (E[1] = 1) and positivity of the moment matrix over monomials of
/// degree <= floor(d/2), via exact LDL^T factorization with symmetric
/// pivoting.  PASS iff no negative pivot appears.  Throws DomainError
/// when the table lacks a needed monomial (naming it).
PseudoOutcome check_pseudo_expectation(const MomentTable& table, long d);

}  // namespace blsos::oracle
