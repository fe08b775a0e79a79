#pragma once

#include <stdexcept>
#include <string>

namespace sae {

// Input violates a documented precondition: bad shape, out-of-range value,
// unknown identifier, malformed file.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine failed: singular system, failed factorization,
// non-finite posterior.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sae
