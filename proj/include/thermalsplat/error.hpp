#pragma once

#include <stdexcept>
#include <string>

namespace thermalsplat {

/// Bad invocation or configuration (CLI exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or missing input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values during training or rendering (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace thermalsplat
