#pragma once

#include <stdexcept>
#include <string>

namespace moyal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments: bad bounds, mismatched grids, broken invariants.
class DomainError : public Error {
public:
  using Error::Error;
};

/// A finite-difference stencil does not fit on the available samples.
class StencilError : public Error {
public:
  using Error::Error;
};

/// An iterative or series procedure failed to converge.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// Closed forms hit a pole (real-time caustic, vanishing denominator).
class SingularityError : public Error {
public:
  using Error::Error;
};

/// Ground-state fits rejected their input.
class FitError : public Error {
public:
  using Error::Error;
};

}  // namespace moyal
