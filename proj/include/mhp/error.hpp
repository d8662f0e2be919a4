#pragma once

#include <stdexcept>
#include <string>

namespace mhp {

// Tensor shapes do not line up for the requested operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numeric argument is outside an operation's domain (log of a non-positive
// value, a non-positive step size, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed or inconsistent input data (files, sequences, configs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A training or evaluation step produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A Hawkes configuration whose branching matrix has spectral radius >= 1.
class UnstableConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Rejection sampling ran out of attempts.
class RetryExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mhp
