#pragma once

#include <stdexcept>
#include <string>

namespace tusnady {

/// Argument outside the mathematical domain of a function (non-finite input,
/// index out of range, unsupported order).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A hypothesis of a bound does not hold for the requested parameters.
/// The message names the failed condition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical oracle could not produce a trustworthy value
/// (e.g. continued-fraction non-convergence).
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tusnady
