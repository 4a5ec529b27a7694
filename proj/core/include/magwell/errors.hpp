#pragma once

#include <stdexcept>
#include <string>

namespace magwell {

// Configuration / input validation problems. The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: non-convergence, degenerate data, guard violations.
// The CLI maps these to exit code 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace magwell
