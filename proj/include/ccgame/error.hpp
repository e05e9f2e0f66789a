#pragma once

#include <stdexcept>
#include <string>

namespace ccgame {

// Malformed instance, profile, parameter or file.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exhaustive enumeration or LP size over the configured budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure inside a solver (LP status other than optimal).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ccgame
