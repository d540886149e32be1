#pragma once

#include <stdexcept>
#include <string>

namespace mwswitch {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent user input. The CLI maps these to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class RowColSumViolation : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NegativeRate : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class SizeLimitExceeded : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

// A dynamics invariant failed during a run. The CLI maps these to exit code 2.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class DominanceViolation : public InvariantViolation {
 public:
  using InvariantViolation::InvariantViolation;
};

}  // namespace mwswitch
