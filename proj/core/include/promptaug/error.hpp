#pragma once

#include <stdexcept>
#include <string>

namespace promptaug {

/// Broad failure classes. The CLI maps them onto process exit codes.
enum class ErrorKind {
    Config,   // bad or missing configuration
    Backend,  // LLM / T2I / embedding provider failures
    Data,     // dataset, file format and contract violations
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), m_kind(kind) {}

    ErrorKind kind() const noexcept { return m_kind; }

private:
    ErrorKind m_kind;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(ErrorKind::Config, message) {}
};

class BackendError : public Error {
public:
    explicit BackendError(const std::string& message, int status = 0)
        : Error(ErrorKind::Backend, message), m_status(status) {}

    /// HTTP status when the failure came from a response, 0 for transport errors.
    int status() const noexcept { return m_status; }

private:
    int m_status;
};

class DataError : public Error {
public:
    explicit DataError(const std::string& message) : Error(ErrorKind::Data, message) {}
};

/// Process exit code for an error kind: 2 config, 3 backend, 4 data.
int exit_code_for(ErrorKind kind) noexcept;

} // namespace promptaug
