#pragma once

#include <stdexcept>
#include <string>

namespace sggp {

// Base class for all library errors surfaced through the C API.
struct Error : std::runtime_error {
    explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

// Malformed grammar/config/CSV input.
struct ParseError : Error {
    ParseError(std::string msg, int line = 0, int col = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg
                         : std::move(msg)),
          line(line), col(col) {}
    int line = 0;
    int col = 0;
};

// Semantically invalid request (bad parameters, unbound variable, ...).
struct InvalidArgument : Error {
    using Error::Error;
};

// Grammar cannot produce any individual under the requested depth bound.
struct InfeasibleGrammar : Error {
    using Error::Error;
};

// Filesystem failures.
struct IoError : Error {
    using Error::Error;
};

} // namespace sggp
