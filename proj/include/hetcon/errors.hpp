#pragma once

#include <stdexcept>
#include <string>

namespace hetcon {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates an operation's precondition (bad shapes, unordered
/// times, parameters outside their domain).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure that could not reach its target.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace hetcon
