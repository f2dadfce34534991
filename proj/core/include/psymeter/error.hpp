#pragma once

#include <stdexcept>
#include <string>

namespace psymeter {

// Exception hierarchy. The CLI maps each category onto an exit code:
// UsageError -> 1, DataError -> 2, NumericalError -> 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad parameters, bad configuration, violated preconditions on arguments.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Problems with the input data itself.
class DataError : public Error {
 public:
  using Error::Error;
};

/// CSV syntax or cell content errors. Carries the 1-based file row and the
/// column name.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t row, std::string column)
      : DataError(what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

/// Zero variance, constant item, constant ratings, and similar.
class DegenerateInputError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyDatasetError : public DataError {
 public:
  using DataError::DataError;
};

class RangeError : public DataError {
 public:
  using DataError::DataError;
};

/// Participant sets of two administrations do not match.
class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A kernel was called on input that breaks its stated contract (for example
/// a non-symmetric matrix passed to the symmetric eigen-solver).
class ContractViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SeparationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Iterative method ran out of iterations. `Payload` carries the last iterate.
template <class Payload>
class IterationLimitError : public NumericalError {
 public:
  IterationLimitError(const std::string& what, Payload last)
      : NumericalError(what), last_(std::move(last)) {}

  const Payload& last_iterate() const noexcept { return last_; }

 private:
  Payload last_;
};

}  // namespace psymeter
