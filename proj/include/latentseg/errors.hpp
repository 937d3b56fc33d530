#pragma once

#include <stdexcept>
#include <string>

namespace latentseg {

// Bad inputs, malformed files, contract violations. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failures: divergence, undefined metrics, degenerate geometry. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace latentseg
