#pragma once

#include <stdexcept>
#include <string>

namespace rfi {

/// Bad user input: malformed files, inconsistent pedigree, invalid config.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-positive-definite systems, divergent chains.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem trouble: unreadable inputs, unwritable output directories.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rfi
