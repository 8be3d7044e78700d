#pragma once

#include <stdexcept>
#include <string>

namespace svseg {

/// Malformed or inconsistent on-disk payload (frames, masks, RLE, models).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Line-oriented text that failed to parse; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Violated precondition on an in-memory argument.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace svseg
