#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace eqp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (dimension mismatch, bad argument).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A map sent a state to (numerically) zero trace: the projective action is
/// undefined there.
class DestructiveImageError : public Error {
 public:
  explicit DestructiveImageError(const std::string& what,
                                 std::optional<std::int64_t> index = std::nullopt)
      : Error(what), index_(index) {}
  std::optional<std::int64_t> index() const { return index_; }

 private:
  std::optional<std::int64_t> index_;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class NonConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Invalid driver parameters (non-stochastic rows, reducible chain, ...).
class DriverError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// Config validation failure; `pointer` is a JSON pointer into the config.
class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

/// Memory budget or search horizon exhausted.
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace eqp
