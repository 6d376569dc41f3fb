#pragma once

#include <stdexcept>
#include <string>

namespace dockrl {

// Bad config file / config-checkpoint mismatch; the CLI maps this to exit 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Solver non-convergence or a non-finite result; the CLI maps this to exit 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dockrl
