#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kdeknn {

// Root of every error thrown by the library. The CLI maps subclasses onto
// exit codes (see cli/commands.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition (bad k, bad fraction, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class DimensionError : public PreconditionError {
public:
    DimensionError(const std::string& what, std::size_t expected, std::size_t got)
        : PreconditionError(what + ": expected dimension " + std::to_string(expected) +
                            ", got " + std::to_string(got)) {}
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class ImputationError : public Error {
public:
    using Error::Error;
};

class StratificationError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Rejection loop ran out of draws before meeting the per-class targets.
class GenerationStalled : public Error {
public:
    GenerationStalled(const std::string& what, double rate0, double rate1)
        : Error(what), acceptance_{rate0, rate1} {}
    double acceptance_rate(int cls) const noexcept { return acceptance_[cls == 0 ? 0 : 1]; }

private:
    double acceptance_[2];
};

}  // namespace kdeknn
