#ifndef ROIREG_ERROR_HPP
#define ROIREG_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace roireg {

enum class ErrorCode {
    InvalidArgument,
    DimMismatch,
    EmptyMask,
    EmptyList,
    DegenerateMask,
    ChannelMismatch,
    SliceOutOfRange,
    SingularTransform,
    EmptyPairing,
    NonFiniteLoss,
    GridTooSmall,
    PointOutOfRange,
    DisplacedPointOutOfRange,
    IoError,
    InconsistentDims,
    ManifestParseError,
    SizeMismatch,
    UnsupportedVersion,
    CorruptMask,
    ShapePlacementFailure,
    OutOfBounds,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::DegenerateMask: return "DegenerateMask";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::SliceOutOfRange: return "SliceOutOfRange";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::EmptyPairing: return "EmptyPairing";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::PointOutOfRange: return "PointOutOfRange";
    case ErrorCode::DisplacedPointOutOfRange: return "DisplacedPointOutOfRange";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InconsistentDims: return "InconsistentDims";
    case ErrorCode::ManifestParseError: return "ManifestParseError";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::CorruptMask: return "CorruptMask";
    case ErrorCode::ShapePlacementFailure: return "ShapePlacementFailure";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    }
    return "Unknown";
}

/// Every failure raised by the engine carries one of the typed codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

} // namespace roireg

#endif // ROIREG_ERROR_HPP
