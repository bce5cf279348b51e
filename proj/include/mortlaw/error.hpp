#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mortlaw {

/// Parameter vector outside the law's domain (wrong length, negative value, p outside [0,1]).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dataset violates its invariants (non-positive exposure, too few rows, gaps).
class DataError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file. Carries the 1-based line number when one applies.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string &message, std::size_t line = 0)
        : std::runtime_error{line == 0 ? message : "line " + std::to_string(line) + ": " + message},
          line_{line} {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A numerical procedure could not produce a finite answer.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or request (wrong model kind, bad GA settings).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace mortlaw
