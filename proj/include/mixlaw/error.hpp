#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mixlaw {

// Machine-readable failure categories. The CLI maps each to an exit code and
// prints the category name; the HTTP server maps them to status codes.
enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    InsufficientPoints,
    Degenerate,
    MissingDomain,
    NoSolution,
    Infeasible,
    EmptyCandidates,
    Shortfall,
    Coverage,
    FitFailed,
    Parse,
    Schema,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string rule = {})
        : std::runtime_error(message), kind_(kind), rule_(std::move(rule)) {}

    ErrorKind kind() const noexcept { return kind_; }
    // Name of the violated invariant, when one applies (e.g. "simplex_sum").
    const std::string& rule() const noexcept { return rule_; }

private:
    ErrorKind kind_;
    std::string rule_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message, std::string rule = {}) {
    throw Error(kind, message, std::move(rule));
}

}  // namespace mixlaw
