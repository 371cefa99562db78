#pragma once

#include <stdexcept>
#include <string>

namespace liouville {

/// Input that violates a documented precondition or invariant (bad matrix,
/// out-of-range coefficient, grid mismatch, resolution rule, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value or left its trusted regime.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace liouville
