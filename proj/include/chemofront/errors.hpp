#pragma once

/// \file
/// Exception types shared by every chemofront module.

#include <stdexcept>
#include <string>

namespace chemofront {

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A tail level outside (0, u0(xi0)), or an inverse that does not fit in a double.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// An operation that needs a slowly decaying family was handed a fast one.
class FamilyNotSlowError : public Error {
 public:
  using Error::Error;
};

class CertificationWindowError : public Error {
 public:
  using Error::Error;
};

class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

/// Negative or non-finite density, or a pre-clamp value below the rounding floor.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class PositivityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AllocationLimitError : public Error {
 public:
  using Error::Error;
};

class WallClockError : public Error {
 public:
  using Error::Error;
};

/// A tracked crossing entered the right margin: domain adaptation fell behind.
class StaleWindowError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace chemofront
