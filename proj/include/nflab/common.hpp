// Shared error types and small helpers used across the library.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nflab {

// Bad user input: mismatched options, malformed files, schema violations.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation left its domain of validity (divergent composition, failed
// energy monitor, non-terminating series exponential).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// A configured resource budget (memory, term count) was exceeded.
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

using std::int64_t;
using std::uint64_t;

}  // namespace nflab
