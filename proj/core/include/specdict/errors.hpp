#pragma once

#include <stdexcept>
#include <string>

namespace specdict {

// Base class for all library failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameter values. CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable, malformed, or inconsistent input data. CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure (factorization breakdown, widespread non-convergence).
// CLI exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace specdict
