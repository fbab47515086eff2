#pragma once

#include <stdexcept>
#include <string>

namespace synthvol {

// Base of every error raised by the engine. The CLI maps the concrete
// subclasses onto its exit-code taxonomy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or parameter range (CLI exit 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Unreadable or malformed input file (CLI exit 3).
class FormatError : public Error {
public:
    using Error::Error;
};

class UnsupportedTypeError : public FormatError {
public:
    using FormatError::FormatError;
};

// Operating-system level I/O failure.
class IoError : public Error {
public:
    using Error::Error;
};

// Grid / channel mismatch between operands (CLI exit 4).
class ShapeError : public Error {
public:
    using Error::Error;
};

// Mathematically undefined request (empty foreground, zero-mean field, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

} // namespace synthvol
