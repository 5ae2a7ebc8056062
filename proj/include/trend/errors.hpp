#pragma once

#include <stdexcept>
#include <string>

namespace trend {

// Malformed configuration or CLI input. Mapped to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or broken numeric invariants. Mapped to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace trend
