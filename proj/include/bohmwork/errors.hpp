#pragma once

#include <stdexcept>
#include <string>

namespace bohmwork {

// Base of every library error. Validation errors reject inputs before any
// compute starts; numerical errors surface failures discovered while running.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateStateError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class StepSizeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TruncationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class AllocationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A trajectory left the grid interior.
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A trajectory hit a node of the wave function (invalid velocity sentinel).
class NodeCollisionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Ensemble failure count exceeded its budget.
class EnsembleError : public NumericalError {
 public:
  EnsembleError(const std::string& what, std::size_t sample_index)
      : NumericalError(what), sample_index_(sample_index) {}
  std::size_t sample_index() const { return sample_index_; }

 private:
  std::size_t sample_index_;
};

}  // namespace bohmwork
