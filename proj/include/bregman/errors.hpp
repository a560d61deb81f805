#pragma once

#include <stdexcept>
#include <string>

namespace bregman {

/// Input outside the documented precondition of an operation.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// State enumeration requested beyond the supported dimension.
class EnumerationLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The model does not provide a derivative the estimator needs.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace bregman
