#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace guardnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or matrix dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (files, labels, configuration values).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An object is in a state that does not allow the requested operation.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Training diverged; carries the epoch at which it happened.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// An attacker cannot produce a perturbation for the requested target.
class AttackError : public Error {
 public:
  using Error::Error;
};

/// Not enough eligible nodes to build a target set.
class SelectionError : public Error {
 public:
  SelectionError(const std::string& what, std::size_t available)
      : Error(what), available_(available) {}
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t available_;
};

/// Configuration file problems (unknown keys, bad values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace guardnet
