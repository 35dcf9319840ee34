// Error hierarchy shared by all doetree components.
#pragma once

#include <stdexcept>
#include <string>

namespace doetree {

// Bad input data: malformed files, inconsistent datasets, invariant breaches.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: IRLS divergence, separation, degenerate scale estimates.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unusable configuration: invalid flag combinations, out-of-range parameters.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace doetree
