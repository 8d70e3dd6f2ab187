#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace contact_kam {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Syntax or identifier error in an expression; offset is a byte index into the source.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

// Evaluation outside the domain of a function (log of a non-positive value, ...).
struct DomainError : Error {
  using Error::Error;
};

// Iterative solvers that fail, unexpected divergence, empty clusters.
struct NumericalError : Error {
  using Error::Error;
};

// Violated preconditions of an operation (ordering of solutions, unreachable targets, ...).
struct PreconditionError : Error {
  using Error::Error;
};

}  // namespace contact_kam
