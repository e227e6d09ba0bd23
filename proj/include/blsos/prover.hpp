#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "blsos/certificate.hpp"
#include "blsos/datum.hpp"
#include "blsos/error.hpp"
#include "blsos/exactalg.hpp"

/// The proving pipeline: given a feasible instance it assembles a
/// certificate that the verifier accepts, by clipping exponents above one,
/// peeling sup-norm indices, decomposing the exponent vector over the
/// vertices of the feasible polytope, splitting along critical subspaces,
/// and discharging binary vertices as explicit leftover sums of squares.
namespace blsos::prover {

using certificate::Certificate;
using exactalg::Rational;
using exactalg::Subspace;

/// The instance provably violates the dimension condition; carries the
/// violating subspace.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, Subspace witness)
      : Error(what), witness_(std::move(witness)) {}
  const Subspace& witness() const { return witness_; }

 private:
  Subspace witness_;
};

/// The candidate family was truncated before feasibility could be decided
/// and the caller did not opt into proving anyway.
class UnknownFeasibilityError : public Error {
 public:
  using Error::Error;
};

struct ProveOptions {
  /// Closure rounds for the candidate subspace family.
  std::size_t subspace_budget = 2;
  /// Ambient-dimension cap for exact vertex enumeration.
  std::size_t vertex_cap = 8;
  /// Proceed when feasibility is undecided at the search budget.  The
  /// emission still fails fast on any sub-task that turns out infeasible,
  /// so no certificate is ever produced for a false inequality.
  bool assume_feasible = false;
  /// Largest accepted common denominator of the exponent vector.
  long max_denominator = 64;
};

/// The two factor instances of a split along a critical subspace W: the
/// fiber instance on W-coordinates (rank-0 restrictions kept as maps onto
/// a zero-dimensional codomain) and the quotient instance on complement
/// coordinates, plus the partition of each image point set V_j into
/// classes modulo B_j W, keyed by the lexicographically least member.
struct SplitData {
  Subspace w;
  datum::BLDatum datum_w;
  datum::BLDatum datum_q;
  std::vector<std::map<std::vector<long>, std::vector<std::vector<long>>>>
      classes;
};

/// Produces a certificate for the instance inequality of `d`.  Throws
/// InfeasibleError (with witness) when the dimension condition fails on a
/// candidate subspace, UnknownFeasibilityError when the candidate family
/// is truncated and `assume_feasible` is off, and DomainError when the
/// exponent denominator exceeds the configured cap.
Certificate prove(const datum::BLDatum& d, const ProveOptions& options = {});

/// Certificate for `d` with its exponents replaced by `p`, skipping the
/// feasibility pre-check.  Intended for vertices of the feasible polytope;
/// an infeasible `p` is detected during emission and raises an error
/// instead of producing a certificate.
Certificate prove_vertex(const datum::BLDatum& d,
                         const std::vector<Rational>& p,
                         const ProveOptions& options = {});

/// Certificate for a binary exponent vector via the flat leftover-sum
/// construction (no recursion): the joint map x -> (B_j x : p_j = 1) must
/// be injective on the domain, which is re-verified directly.
Certificate prove_zero_one(const datum::BLDatum& d,
                           const std::vector<Rational>& p,
                           const ProveOptions& options = {});

/// First candidate subspace W with 0 < dim W < n satisfying the exact
/// equality dim W = sum_j p_j dim(B_j W); the family is already ordered by
/// dimension then canonical basis.
std::optional<Subspace> find_critical_subspace(
    const datum::BLDatum& d, const std::vector<Rational>& p,
    const datum::CandidateFamily& candidates);

/// Splits the instance along a nontrivial proper subspace W.  The domain
/// must decompose as a product of its W-components and its complement
/// components; otherwise a DomainError explains the failure.  Exponents
/// are inherited unchanged by both factors.
SplitData split_datum(const datum::BLDatum& d, const Subspace& w);

}  // namespace blsos::prover
