#ifndef SPECTUNE_ERRORS_HPP_
#define SPECTUNE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace spectune {

// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InvalidToken : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/inf showed up in a numerical routine.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spectune

#endif  // SPECTUNE_ERRORS_HPP_
