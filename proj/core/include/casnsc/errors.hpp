#pragma once

#include <stdexcept>
#include <string>

namespace casnsc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or degenerate input (empty sets, non-finite values, bad sizes).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A position fell outside the grid world.
class OutOfGrid : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration, e.g. a context feature set without a map.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failed even after jitter escalation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A trained model cannot answer the query (no unitary patterns, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Training produced no usable model.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Rollout direction is undefined (zero net displacement).
class UndefinedDirection : public Error {
 public:
  using Error::Error;
};

/// File system or format problems; the message always names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace casnsc
