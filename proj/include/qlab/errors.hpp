#pragma once

#include <stdexcept>
#include <string>

namespace qlab {

// Error taxonomy. The CLI maps these onto exit codes:
//   ConfigError -> 2, PreconditionError (and subclasses) -> 3,
//   InternalInvariantError -> 4.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed config file / unusable command line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller violated a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Input exceeds a documented size cap.
class SizeLimitError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// Structurally invalid argument (bad label range, shape mismatch, ...).
class ArgumentError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// Operation is undefined for this input family (e.g. binary-only op on k > 2).
class DomainError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// Numeric parameter outside its documented range.
class RangeError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// A certificate object failed verification.
class InvalidCertificateError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// A protocol participant broke the interaction contract.
class ProtocolViolationError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// A checked internal invariant failed; indicates a bug, never bad input.
class InternalInvariantError : public Error {
 public:
  using Error::Error;
};

// Simulated circuit left a register in a state the construction forbids.
class CircuitFaultError : public InternalInvariantError {
 public:
  using InternalInvariantError::InternalInvariantError;
};

}  // namespace qlab
