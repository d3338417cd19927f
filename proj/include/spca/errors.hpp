#pragma once

#include <stdexcept>
#include <string>

namespace spca {

/// Malformed or inconsistent input data (files, shapes, labels).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure inside a solver (non-finite values, divergence,
/// degenerate estimates).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace spca
