#pragma once

#include <stdexcept>
#include <string>

namespace shipcast {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or missing input data (CSV, JSON documents, series files).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or argument combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace shipcast
