#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csocnn {

// Root of every error thrown by the library. The CLI maps subclasses onto
// its exit-code contract, so new error types should derive from one of the
// groups below rather than from Error directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data / model format problems (exit code 3).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Numeric failures (exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class StratifyError : public Error {
 public:
  using Error::Error;
};

class DegenerateClass : public Error {
 public:
  using Error::Error;
};

class SchemaError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ParseError : public FormatError {
 public:
  ParseError(const std::string& what, std::size_t row)
      : FormatError(what + " (row " + std::to_string(row) + ")"), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ModelFormatError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ScalerMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

class TrainingDiverged : public NumericError {
 public:
  using NumericError::NumericError;
};

class UndefinedMetric : public NumericError {
 public:
  using NumericError::NumericError;
};

// A long-running operation stopped at the caller's request.
class Cancelled : public Error {
 public:
  using Error::Error;
};

}  // namespace csocnn
