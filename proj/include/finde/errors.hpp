#pragma once
#include <stdexcept>
#include <string>

namespace finde {

// Base class for all structured errors thrown by this library.
struct FindeError : std::runtime_error {
  explicit FindeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/graph shape violations; message names the offending op/node.
struct ShapeError : FindeError {
  using FindeError::FindeError;
};

// MMᵀ (or M̄M̄ᵀ) failed the SPD solve: Cholesky breakdown or condition
// estimate above threshold. Raised instead of silently regularizing.
struct SingularProjection : FindeError {
  using FindeError::FindeError;
};

// Implicit one-step solver failed to reach tolerance, or its preservation
// postcondition failed.
struct NoConvergence : FindeError {
  using FindeError::FindeError;
};

// Adaptive integrator shrank the step below dt_min.
struct StepUnderflow : FindeError {
  using FindeError::FindeError;
};

// NaN/Inf detected in a state or tensor under checked mode.
struct NonFiniteState : FindeError {
  using FindeError::FindeError;
};

// Bad or unknown configuration content.
struct ConfigError : FindeError {
  using FindeError::FindeError;
};

// Filesystem / serialization failures.
struct IoError : FindeError {
  using FindeError::FindeError;
};

}  // namespace finde
