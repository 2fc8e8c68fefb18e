#pragma once

#include <stdexcept>
#include <string>

namespace qnn {

// Base class for all library errors. Subclasses map 1:1 onto the C API
// status codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Operand shapes do not conform (matmul inner extents, component widths, ...).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Value outside the mathematical domain of the operation (zero-norm
// normalization, non-finite quaternion components).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Tape wiring violation: an input node does not belong to the tape being
// recorded onto.
class GraphError : public Error {
 public:
  using Error::Error;
};

// An API precondition was violated (non-scalar loss, empty sequence, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Token id or parameter name not found.
class LookupError : public Error {
 public:
  using Error::Error;
};

// File could not be read/written or has a malformed layout.
class IoError : public Error {
 public:
  using Error::Error;
};

// Bad user-facing configuration; the message names the offending field.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace qnn
