#pragma once

#include <stdexcept>
#include <string>

namespace nmss {

/// Thrown when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters for which a requested quantity is not uniquely defined
/// (degenerate Liouvillian null space, undriven effective rate, ...).
class DegenerateProblem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine produced a non-finite or otherwise unusable value.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nmss
