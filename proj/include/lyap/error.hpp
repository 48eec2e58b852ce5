#pragma once

#include <stdexcept>
#include <string>

namespace lyap {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments or violated preconditions.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An iterative kernel failed to converge or produced untrustworthy output.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed or incomplete configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed persisted data (schema mismatch, truncated file).
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace lyap
