#pragma once

#include <stdexcept>
#include <string>

namespace uwbnli {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "error"; }
};

/// Scenario document does not match the schema. `path()` is a JSON-pointer
/// style location of the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const char* kind() const noexcept override { return "config"; }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A physical or structural invariant was violated.
class InvariantError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invariant"; }
};

/// Query outside the tabulated / supported domain.
class RangeError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "range"; }
};

/// Numerical failure: step validation, degenerate fit, non-finite state.
class NumericalError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numerical"; }
};

} // namespace uwbnli
