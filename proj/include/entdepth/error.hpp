#pragma once

#include <stdexcept>
#include <string>

namespace entdepth {

// Bad arguments, malformed files or configuration. CLI exit code 1.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inputs are individually valid but inconsistent with each other
// (e.g. curves built from different eta distributions). CLI exit code 2.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed to meet its accuracy contract. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace entdepth
