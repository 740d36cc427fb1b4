#pragma once

#include <stdexcept>
#include <string>

namespace mpqdpg {

// Error categories map onto CLI exit codes (see tools/main.cpp):
// ConfigError/UsageError -> 2, IoError/FormatError -> 3, NumericError -> 4.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or incompatible file content (checkpoint header, CSV rows).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values where finite ones are required (corrupted state, diverged loss).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Vehicle model cannot be built from the supplied coefficients.
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mpqdpg
