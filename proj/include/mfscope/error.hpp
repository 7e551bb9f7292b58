#pragma once

#include <stdexcept>
#include <string>

namespace mfscope {

/// Classification of library failures. The CLI maps these onto exit codes.
enum class ErrorKind {
    invalid_spec,
    invalid_config,
    invalid_k,
    parse,
    empty_input,
    io,
    degenerate_bandwidth,
    degenerate_neighborhood,
    zero_scatter,
    invalid_kernel,
    invalid_basis,
    solver_failure,
    cannot_merge,
};

inline const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::invalid_spec: return "invalid-spec";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::invalid_k: return "invalid-K";
    case ErrorKind::parse: return "parse";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::io: return "io";
    case ErrorKind::degenerate_bandwidth: return "degenerate-bandwidth";
    case ErrorKind::degenerate_neighborhood: return "degenerate-neighborhood";
    case ErrorKind::zero_scatter: return "zero-scatter";
    case ErrorKind::invalid_kernel: return "invalid-kernel";
    case ErrorKind::invalid_basis: return "invalid-basis";
    case ErrorKind::solver_failure: return "solver-failure";
    case ErrorKind::cannot_merge: return "cannot-merge";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Location-carrying parse failure (1-based row and column).
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& what)
        : Error(ErrorKind::parse, "row " + std::to_string(row) + ", column " +
                                      std::to_string(column) + ": " + what),
          row_(row), column_(column)
    {
    }

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

} // namespace mfscope
