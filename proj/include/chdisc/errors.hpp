#pragma once

#include <stdexcept>
#include <string>

namespace chdisc {

/// Mismatched sizes between objects that must be composed (channel input vs
/// state dimension, tensor factors, test vs alphabet, ...).
class DimensionMismatchError : public std::invalid_argument {
 public:
  explicit DimensionMismatchError(const std::string& what)
      : std::invalid_argument(what) {}
};

/// A value-type invariant failed beyond its stated tolerance (negative
/// probability, non-Hermitian matrix, trace off, incomplete Kraus set, ...).
class InvariantViolationError : public std::invalid_argument {
 public:
  explicit InvariantViolationError(const std::string& what)
      : std::invalid_argument(what) {}
};

/// A solver was called outside its supported regime (wrong hypothesis kind,
/// unsupported level, empty vertex set, ...).
class SolverPreconditionError : public std::invalid_argument {
 public:
  explicit SolverPreconditionError(const std::string& what)
      : std::invalid_argument(what) {}
};

/// An exact enumeration would exceed the hard size cap.
class SizeCapError : public std::runtime_error {
 public:
  explicit SizeCapError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chdisc
