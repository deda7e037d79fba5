#pragma once

#include <stdexcept>
#include <string>

namespace balloc {

// Bad input: out-of-range parameters, malformed configs, infeasible combinations.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A conditional check was asked about an input that does not meet its hypothesis.
class PreconditionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnsupportedError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace balloc
