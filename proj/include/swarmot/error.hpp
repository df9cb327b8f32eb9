#pragma once

#include <stdexcept>
#include <string>

namespace swarmot {

/// Raised when an input violates a documented precondition (bad density,
/// malformed config, unsupported instance size).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation breaks a numerical tolerance. Carries the name of
/// the module that detected the violation.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

}  // namespace swarmot
