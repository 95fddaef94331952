#pragma once

#include <stdexcept>
#include <string>

namespace mvtrack {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or schema.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Box adjustment produced a non-finite box.
class AdjustmentError : public Error {
public:
    using Error::Error;
};

/// Singular or non-PSD matrix encountered in filtering or distance computation.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// No complete finite-cost assignment exists.
class InfeasibleAssignment : public Error {
public:
    using Error::Error;
};

/// Frames delivered out of timestamp order.
class SequencingError : public Error {
public:
    using Error::Error;
};

/// A metric is undefined for the given input (e.g. no ground truth).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

/// A file could not be parsed. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

} // namespace mvtrack
