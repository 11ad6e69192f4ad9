#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tputlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. line() counts data rows from 1; the header is row 0.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A caller-supplied argument is outside the operation's contract.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Model fitting is impossible on the supplied data (singular system, too few distinct values).
class DegenerateFitError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    NumericalError(int iteration, const std::string &what)
        : Error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

/// The trace cannot carry even a single chunk of video.
class InfeasibleTraceError : public Error {
public:
    using Error::Error;
};

} // namespace tputlab
