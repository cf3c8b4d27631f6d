#include "zrec/error.hpp"

namespace zrec {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Ok: return "Ok";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NotPrimitive: return "NotPrimitive";
        case ErrorCode::DeadSymbol: return "DeadSymbol";
        case ErrorCode::SizeOverflow: return "SizeOverflow";
        case ErrorCode::EigenFailure: return "EigenFailure";
        case ErrorCode::NotCentered: return "NotCentered";
        case ErrorCode::SingularSolve: return "SingularSolve";
        case ErrorCode::RangeOverflow: return "RangeOverflow";
        case ErrorCode::ZeroMeasure: return "ZeroMeasure";
        case ErrorCode::CapTooSmall: return "CapTooSmall";
        case ErrorCode::EmptySample: return "EmptySample";
        case ErrorCode::DegenerateX: return "DegenerateX";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::UnknownPreset: return "UnknownPreset";
        case ErrorCode::Degenerate: return "Degenerate";
        case ErrorCode::Periodic: return "Periodic";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

}  // namespace zrec
