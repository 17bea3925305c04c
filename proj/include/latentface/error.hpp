#pragma once

#include <stdexcept>
#include <string>

namespace latentface {

// Precondition violated by the caller (bad dimension, unknown layer, empty list).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data is structurally fine but holds values we cannot accept (NaN, bad index).
class InvalidData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimization diverged; the message names the step and the offending loss term.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename E = InvalidArgument>
inline void require(bool condition, const std::string& message) {
  if (!condition) {
    throw E(message);
  }
}

} // namespace latentface
