#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace zrec {

// Numeric values are part of the C API (zrec.h) and must stay in sync.
enum class ErrorCode : int {
    Ok = 0,
    InvalidArgument = 1,
    NotPrimitive = 2,
    DeadSymbol = 3,
    SizeOverflow = 4,
    EigenFailure = 5,
    NotCentered = 6,
    SingularSolve = 7,
    RangeOverflow = 8,
    ZeroMeasure = 9,
    CapTooSmall = 10,
    EmptySample = 11,
    DegenerateX = 12,
    ConfigInvalid = 13,
    UnknownPreset = 14,
    Degenerate = 15,
    Periodic = 16,
    Io = 17,
    Internal = 18,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace zrec
