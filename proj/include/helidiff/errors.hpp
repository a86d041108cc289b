#pragma once

#include <stdexcept>
#include <string>

namespace helidiff {

/// Invalid or inconsistent user configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run that cannot continue for numerical reasons (e.g. positivity budget
/// exhausted). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a documented precondition (dimension mismatch and similar).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The requested diagnostic is undefined for this operator (odd dimension,
/// singular matrix, vanishing field, ...).
class NotApplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw ContractViolation(what);
}

}  // namespace helidiff
