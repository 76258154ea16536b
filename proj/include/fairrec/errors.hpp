#pragma once

#include <stdexcept>
#include <string>

namespace fairrec {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input: bad shapes, out-of-range parameters, malformed matrices.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A solver did not produce a certified answer (infeasible, unbounded,
// numerical trouble, iteration cap).
class SolverError : public Error {
 public:
  using Error::Error;
};

// Filesystem and parse failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Nash welfare evaluated at a point where some normalized utility is zero.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairrec
