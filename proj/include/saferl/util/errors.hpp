#pragma once

#include <stdexcept>
#include <string>

namespace saferl {

// Malformed or inconsistent inputs (bad shapes, invalid distributions,
// parameters outside their domain).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An enumeration or search would exceed the configured budget.
struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The constraint set is empty for the given instance.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical faults detected at runtime (non-finite state, checksum mismatch).
struct FaultError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace saferl
