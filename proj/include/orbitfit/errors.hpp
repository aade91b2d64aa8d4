#pragma once

#include <stdexcept>
#include <string>

namespace orbitfit {

/// Input vector or matrix has the wrong shape for the object it is applied to.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (e.g. negative
/// time for an exponentially stable comparison function).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed configuration or JSON document. `path` points at the offending
/// field, e.g. "data.n".
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string path, const std::string& what)
        : std::invalid_argument(path.empty() ? what : path + ": " + what), path_(std::move(path)), message_(what) {}

    const std::string& path() const noexcept { return path_; }
    /// Message without the path prefix.
    const std::string& message() const noexcept { return message_; }

private:
    std::string path_;
    std::string message_;
};

/// Non-finite state or escape from the safety region while integrating a flow.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace orbitfit
