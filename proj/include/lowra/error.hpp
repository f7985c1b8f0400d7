#pragma once

#include <stdexcept>
#include <string>

namespace lowra {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad numeric content: NaN/Inf values, out-of-range codes, degenerate weights.
class DataError : public Error {
public:
    using Error::Error;
};

/// Inconsistent shapes or mismatched structures.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed files: bad magic, truncation, checksum or pad-bit violations.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Unsupported configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The bit budget cannot be met. Carries the minimum bits-per-parameter
/// that would be achievable with the allowed precision set.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, double min_achievable_bpp)
        : Error(what), min_achievable_bpp(min_achievable_bpp) {}

    double min_achievable_bpp;
};

}  // namespace lowra
