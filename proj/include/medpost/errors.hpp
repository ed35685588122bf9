#pragma once

#include <stdexcept>
#include <string>

namespace medpost {

// Three failure categories, mirrored by the CLI exit codes (2, 3, 4).

/// Invalid configuration or violated precondition on an argument.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or unusable input data (missing file, bad cell, rank deficiency).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed (non-PD matrix, exploding sampler state).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace medpost
