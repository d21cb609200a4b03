#pragma once

#include <stdexcept>
#include <string>

namespace lambdamut {

/// Base class of every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs violate a documented precondition (bad measure, bad sample size,
/// dust condition, infinite activity where finite activity is required, ...).
class precondition_error : public error {
 public:
  using error::error;
};

/// A numerical procedure could not deliver its guarantee (quadrature did not
/// converge, integral diverges, window extension cap reached).
class numerical_error : public error {
 public:
  using error::error;
};

/// Backward window extension hit its hard cap. This is a truncation event and
/// is never absorbed silently.
class window_exhausted : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

}  // namespace lambdamut
