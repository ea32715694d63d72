#pragma once

#include <stdexcept>
#include <string>

namespace amc {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/matrix shape disagreement.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid argument or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Out-of-range label or index.
class IndexError : public Error {
 public:
  using Error::Error;
};

// API contract violated (e.g. backward on a non-scalar loss).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or failed numerical procedure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace amc
