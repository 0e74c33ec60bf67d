#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gcml {

enum class ErrorCode {
    ValidationError,
    BracketInvalid,
    ToleranceNotReached,
    LengthMismatch,
    InvalidK,
    IndexOutOfRange,
    TangentCollapse,
    NonPositiveValue,
    WindowTooSmall,
    InsufficientOverlap,
    GridMismatch,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::BracketInvalid: return "BracketInvalid";
    case ErrorCode::ToleranceNotReached: return "ToleranceNotReached";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::TangentCollapse: return "TangentCollapse";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Process exit status for an error: 2 validation, 3 numerical, 4 I/O.
constexpr int exit_code(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ValidationError:
    case ErrorCode::BracketInvalid:
    case ErrorCode::LengthMismatch:
    case ErrorCode::InvalidK:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::GridMismatch:
        return 2;
    case ErrorCode::IoError:
        return 4;
    default:
        return 3;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

inline void require(bool ok, ErrorCode code, const char* what) {
    if (!ok) throw Error(code, what);
}

} // namespace detail
} // namespace gcml
