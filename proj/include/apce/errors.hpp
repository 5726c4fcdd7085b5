#pragma once

#include <stdexcept>
#include <string>

namespace apce {

// Input/domain problems: bad files, out-of-domain values, empty arms.
// Mapped to exit code 2 by the CLI.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: separation, degenerate strata, non-finite state.
// Mapped to exit code 3 by the CLI.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace apce
