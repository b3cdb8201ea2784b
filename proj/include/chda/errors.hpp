#pragma once

#include <stdexcept>
#include <string>

namespace chda {

/// Bad file magic, unsupported version, or malformed record structure.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Header dimensions disagree with an expectation or with each other.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// File ended before the payload announced by its header.
struct TruncatedError : std::runtime_error {
    explicit TruncatedError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative linear solve failed to reach tolerance.
struct SolverError : std::runtime_error {
    SolverError(const std::string& what, int iterations, double residual)
        : std::runtime_error(what), iterations(iterations), residual(residual) {}
    int iterations;
    double residual;
};

/// Schema violation in a configuration file.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chda
