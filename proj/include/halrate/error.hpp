#ifndef HALRATE_ERROR_HPP
#define HALRATE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace halrate {

/// Raised when an argument violates an operation's precondition
/// (dimension/kind mismatch, coefficient outside [0,1], invalid schedule...).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A claimed fixed point (or zero, or minimizer) failed certification.
class FixtureError : public std::runtime_error {
 public:
  explicit FixtureError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace halrate

#endif  // HALRATE_ERROR_HPP
