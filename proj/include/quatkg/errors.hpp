#pragma once

#include <stdexcept>
#include <string>

namespace quatkg {

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Non-finite scores, diverging losses and the like.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace quatkg
