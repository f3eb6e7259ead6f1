#pragma once

#include <stdexcept>
#include <string>

namespace kbu {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, dimensions, or input validation failure.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: loss of positive definiteness, singular solves,
/// non-finite values produced during integration.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The integrator exhausted its step budget before reaching the end time.
class NonconvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Filesystem / stream failure while reading or writing experiment data.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kbu
