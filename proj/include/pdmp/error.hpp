#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdmp {

/// Error categories. The numeric values double as CLI exit codes and as the
/// C API status codes.
enum class ErrorKind : int {
    validation = 1,  // bad model, bad argument, domain violation
    numeric = 2,     // non-convergence, failed root bracket, non-finite state
    io = 3,          // unreadable or unwritable file
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// Syntax error in an expression, positioned by byte offset into the source.
class ParseError : public ValidationError {
public:
    ParseError(std::size_t offset, const std::string& message)
        : ValidationError("offset " + std::to_string(offset) + ": " + message),
          offset_(offset),
          message_(message) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }
    [[nodiscard]] const std::string& message() const noexcept { return message_; }

private:
    std::size_t offset_;
    std::string message_;
};

/// Evaluation failure (unbound variable or non-finite intermediate), positioned
/// at the offending node.
class EvalError : public ValidationError {
public:
    EvalError(std::size_t offset, const std::string& message)
        : ValidationError("offset " + std::to_string(offset) + ": " + message), offset_(offset) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace pdmp
