#pragma once

#include <stdexcept>
#include <string>

namespace swv {

// All library errors derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class PathError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, long step) : Error(what), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

class RelaxationError : public Error {
public:
    using Error::Error;
};

// Parse errors carry a kind so tests and the CLI can tell them apart.
class ParseError : public Error {
public:
    enum class Kind {
        BadMagic,
        VersionMismatch,
        Truncated,
        Malformed,
        Unsupported,
        CheckValue,
        Length,
        TooLarge,
    };

    ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class ManifestError : public Error {
public:
    using Error::Error;
};

// Bad configuration or usage, as opposed to bad data.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace swv
