#pragma once

#include <stdexcept>
#include <string>

namespace rost {

// Raised when inputs violate a documented precondition (parameter domains,
// shape mismatches, malformed configuration).  The CLI maps this to its
// validation exit code.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a numerically checked postcondition fails, e.g. an overlap
// matrix that an entrywise map was supposed to keep positive semidefinite.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, double detail = 0.0)
      : std::runtime_error(what), detail_(detail) {}
  // Context-dependent diagnostic, e.g. the offending minimum eigenvalue.
  double detail() const { return detail_; }

 private:
  double detail_;
};

}  // namespace rost
