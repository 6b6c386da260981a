#pragma once
#include <stdexcept>
#include <string>

namespace microgrid {

/// Invalid or inconsistent configuration (bad key, bad value, failed validation).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input data (CSV schema, cadence, negative values, bad checkpoint).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem problems: missing file, unwritable directory.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Violated operation precondition (action index out of range, day beyond trace).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace microgrid
