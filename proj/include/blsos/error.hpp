#pragma once

#include <stdexcept>
#include <string>

namespace blsos {

/// Base class for every recoverable engine error.  Callers that need to
/// distinguish failure classes catch one of the subclasses below.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape or ambient-dimension disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed textual input (instance files, certificates, rationals).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally well-formed input that violates a documented precondition
/// (non-surjective map, subspace not contained in another, point outside a
/// polytope, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant was violated.  Reaching this is a bug, never a
/// property of the input; the CLI maps it to its own exit code.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace blsos
