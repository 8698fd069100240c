#pragma once

#include <stdexcept>
#include <string>

namespace dbnapprox {

// Requested operation is not defined for the given configuration
// (e.g. a closed-form norm of a custom density).
class UnsupportedError : public std::runtime_error {
 public:
  explicit UnsupportedError(const std::string& what) : std::runtime_error(what) {}
};

// A configured resource limit (quadrature node budget, enumeration cap)
// would be exceeded.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative search exhausted its schedule without reaching the requested
// tolerance. Carries the best error actually achieved.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best)
      : std::runtime_error(what), best_achieved(best) {}
  double best_achieved;
};

// Caller violated a documented precondition that is cheap to verify.
class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dbnapprox
