#pragma once

#include <stdexcept>
#include <string>

namespace rwdvv {

// Mismatched rings, malformed keys, rule violations.
struct StructuralError : std::runtime_error {
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// Query outside truncation bounds: the value is unknown, not zero.
struct OutOfRangeError : std::runtime_error {
    explicit OutOfRangeError(const std::string& what) : std::runtime_error(what) {}
};

// A required table entry is missing; carries the printed key.
struct IncompleteTableError : std::runtime_error {
    explicit IncompleteTableError(const std::string& key)
        : std::runtime_error("incomplete invariant table, missing entry: " + key), missing_key(key) {}
    std::string missing_key;
};

// Inconsistent overdetermined system; carries the offending location.
struct SolveError : std::runtime_error {
    explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

// Bad user-facing configuration (models, files, CLI options).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace rwdvv
