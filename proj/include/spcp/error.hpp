#pragma once

#include <stdexcept>
#include <string>

namespace spcp {

// Bad input: malformed files, violated preconditions, inconsistent configs.
// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Factorization failures, non-finite densities and similar. Exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spcp
