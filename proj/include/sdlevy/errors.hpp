#pragma once

#include <stdexcept>
#include <string>

namespace sdlevy {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files, configuration or serialized artifacts.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A parameter set violates a model feasibility constraint.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A complex argument left the analyticity strip of a characteristic function.
class BranchError : public Error {
 public:
  using Error::Error;
};

// An iterative solver or quadrature did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// A strike or argument outside the domain supported by a numerical method.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdlevy
