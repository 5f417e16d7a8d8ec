#pragma once

#include <stdexcept>
#include <string>

namespace it2ml {

// Error taxonomy used across the library. Everything derives from Error so
// callers can catch the whole family at the harness boundary.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension / layout mismatch between tensors or layers.
struct ShapeError : Error {
    using Error::Error;
};

// Operation called in the wrong order (e.g. backward before forward).
struct StateError : Error {
    using Error::Error;
};

// Non-finite values or unsolvable linear systems.
struct NumericError : Error {
    using Error::Error;
};

// Invalid caller-supplied data (empty split, bad config value, ...).
struct InputError : Error {
    using Error::Error;
};

// File-format errors with source location.
struct ParseError : Error {
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), path(path), line(line) {}
    std::string path;
    std::size_t line;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace it2ml
