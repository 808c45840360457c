#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fpk {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid quadrature grid description (n < 2, a >= b, bad weights, ...).
class InvalidGridError : public Error {
 public:
  using Error::Error;
};

/// Elements from different spaces, or coordinate-length mismatch.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Iterative projection (Dykstra) failed to reach feasibility.
class ProjectionError : public Error {
 public:
  using Error::Error;
};

/// A sampling-based certifier could not form a single usable sample.
class SamplingError : public Error {
 public:
  using Error::Error;
};

/// Problem size exceeds a documented enumeration cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Expression or kernel evaluation produced a non-finite value.
class EvalError : public Error {
 public:
  using Error::Error;
};

/// A formula does not apply to the given data (e.g. ball radius with f = 0).
class NotApplicableError : public Error {
 public:
  using Error::Error;
};

/// Neither solvability condition holds and no override was requested.
class ConditionsViolatedError : public Error {
 public:
  using Error::Error;
};

/// The dense reference solver cannot produce a trustworthy answer.
class OracleUnavailableError : public Error {
 public:
  using Error::Error;
};

/// Text could not be parsed; carries the offending position (0-based).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_ = 0;
};

/// Bad or incomplete run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fpk
