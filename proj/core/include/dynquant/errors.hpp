#pragma once

#include <stdexcept>
#include <string>

namespace dynquant {

// Bad configuration / bad input files. CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Failure of a numerical routine (solver breakdown, CFL violation, NaN state).
// CLI maps this to exit code 2.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dynquant
