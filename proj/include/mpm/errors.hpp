#pragma once

#include <stdexcept>
#include <string>

namespace mpm {

// Status codes shared with the C API and the CLI exit codes.
enum class Status : int {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    RateExceeded = 3,
    Capacity = 4,
    Divergence = 5,
    ModelEval = 6,
    Io = 7,
};

class Error : public std::runtime_error {
public:
    Error(Status status, std::string message)
        : std::runtime_error(std::move(message)), status_(status) {}

    Status status() const noexcept { return status_; }

private:
    Status status_;
};

class InvalidArgumentError : public Error {
public:
    explicit InvalidArgumentError(std::string message)
        : Error(Status::InvalidArgument, std::move(message)) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, int line, int column)
        : Error(Status::ParseError,
                "parse error at " + std::to_string(line) + ":" + std::to_string(column) +
                    ": " + message),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

// Rate evaluation failed at a concrete state (division by zero, negative or
// non-finite rate). Carries the offending state and command for diagnostics.
class ModelEvalError : public Error {
public:
    explicit ModelEvalError(std::string message)
        : Error(Status::ModelEval, std::move(message)) {}
};

class RateExceededError : public Error {
public:
    RateExceededError(std::string state_text, double exit_rate, double lambda)
        : Error(Status::RateExceeded,
                "exit rate " + std::to_string(exit_rate) + " of state " + state_text +
                    " exceeds the uniformization rate " + std::to_string(lambda) +
                    "; restart with a larger rate"),
          state_text_(std::move(state_text)), exit_rate_(exit_rate) {}

    const std::string& state_text() const noexcept { return state_text_; }
    double exit_rate() const noexcept { return exit_rate_; }

private:
    std::string state_text_;
    double exit_rate_;
};

class CapacityError : public Error {
public:
    explicit CapacityError(std::string message)
        : Error(Status::Capacity, std::move(message)) {}
};

class DivergenceError : public Error {
public:
    explicit DivergenceError(std::string message)
        : Error(Status::Divergence, std::move(message)) {}
};

class IoError : public Error {
public:
    explicit IoError(std::string message)
        : Error(Status::Io, std::move(message)) {}
};

}  // namespace mpm
