#pragma once

#include <stdexcept>
#include <string>

namespace ringtrap {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, malformed configuration, violated preconditions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not deliver a trustworthy result
/// (norm drift, sector leakage, quadrature non-convergence, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The overlap matrix of a radial basis is not numerically positive definite.
class ConditioningError : public NumericalError {
 public:
  ConditioningError(const std::string& what, int basis_size)
      : NumericalError(what), basis_size_(basis_size) {}
  int basis_size() const noexcept { return basis_size_; }

 private:
  int basis_size_;
};

/// A root search was given an interval without a sign change.
class BracketError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ringtrap
