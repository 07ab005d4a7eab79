#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spktrack {

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct Range {
    double lo = 0.0, hi = 0.0;
    bool operator==(const Range&) const = default;
};

// Error hierarchy. The CLI maps ConfigError to exit code 2 and DataError to 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

// Scene sampling could not satisfy the separation regime within the retry budget.
struct InfeasibleConstraintError : ConfigError {
    using ConfigError::ConfigError;
};

struct ParseError : DataError {
    ParseError(const std::string& what, std::size_t line)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Raised by the embedder when the input cannot produce a usable embedding
// (fewer than three analysis frames, or no energy at all).
struct InsufficientSignalError : Error {
    using Error::Error;
};

// No admissible identity left for a fragment during reassignment.
struct AssignmentError : Error {
    using Error::Error;
};

}  // namespace spktrack
