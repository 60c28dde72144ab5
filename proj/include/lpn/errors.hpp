#pragma once

#include <stdexcept>
#include <string>

namespace lpn {

/// Invalid configuration: bad thresholds, malformed config file, unknown keys.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid input data: malformed annotation lines, broken grid files, shape
/// mismatches between aligned containers.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: divergence during training, non-finite losses.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lpn
