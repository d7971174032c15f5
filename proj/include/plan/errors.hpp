#pragma once

#include <stdexcept>
#include <string>

namespace plan {

// Integration produced a NaN/Inf state component.
struct NonFiniteState : std::runtime_error {
  explicit NonFiniteState(const std::string& what) : std::runtime_error(what) {}
};

// Callback output or trajectory size disagrees with the declared problem dimensions.
struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

// Barzilai-Borwein denominator vanished; callers fall back to the initial step size.
struct DegenerateStep : std::runtime_error {
  explicit DegenerateStep(const std::string& what) : std::runtime_error(what) {}
};

// Axle/tire parameters describe an oversteering vehicle; the speed-dependent
// yaw-rate gain has no real characteristic velocity in that regime.
struct UnderSteerViolation : std::runtime_error {
  explicit UnderSteerViolation(const std::string& what) : std::runtime_error(what) {}
};

// Consecutive course samples coincide (zero chord), so finite differences are undefined.
struct DegenerateSpacing : std::runtime_error {
  explicit DegenerateSpacing(const std::string& what) : std::runtime_error(what) {}
};

// Course does not extend far enough ahead for the requested fitting window.
struct CourseTooShort : std::runtime_error {
  explicit CourseTooShort(const std::string& what) : std::runtime_error(what) {}
};

// Closed-loop lateral offset left the sane envelope; the run is aborted.
struct SimDiverged : std::runtime_error {
  explicit SimDiverged(const std::string& what) : std::runtime_error(what) {}
};

// File could not be read/written or has an invalid format.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Bad key, missing key, or out-of-range value in a scenario/parameter file.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace plan
