#pragma once

#include <stdexcept>
#include <string>

namespace paretolab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value is outside the mathematical domain of an operation
/// (non-positive wealth, negative money leg, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A model or generator parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An operation was applied to an object in an unusable state.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Too few samples for an estimator to run.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Trajectory data that violates an estimator's preconditions.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected by strict parsing. `path()` is a JSON-pointer-like
/// location of the offending key, e.g. "/kesten/alpha_target".
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// An experiment replica failed; the message carries the replica and seed.
class RunError : public Error {
 public:
  using Error::Error;
};

}  // namespace paretolab
