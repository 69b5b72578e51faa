#pragma once

#include <stdexcept>
#include <string>

namespace bclean {

/// Input outside the mathematical domain of an operation (non-positive
/// frequency, negative power, undefined metric inputs, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A focus point or source coincides with a microphone.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Operands with incompatible sizes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid user-supplied configuration (scene files, solver settings, ROIs).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bclean
