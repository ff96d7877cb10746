#pragma once

#include <stdexcept>
#include <string>

namespace renpol {

// Runtime failure inside the numerical pipeline (non-finite values, solver
// breakdown, I/O).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: bad shapes, out-of-range configuration, malformed files.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Operand shapes incompatible with an op.
class ShapeError : public Error {
public:
  using Error::Error;
};

}  // namespace renpol
