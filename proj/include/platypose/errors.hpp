#pragma once

#include <stdexcept>
#include <string>

namespace platypose {

enum class ErrorCode {
    // skeleton / core types
    CyclicHierarchy,
    MultipleRoots,
    TooFewJoints,
    InvalidMotion,
    InvalidCamera,
    // file formats
    IoFailure,
    FormatVersionMismatch,
    CorruptHeader,
    // camera
    AllPointsBehindCamera,
    PointAtCameraPlane,
    // schedule / sampling
    InvalidT,
    TimestepOutOfRange,
    InvalidGrid,
    GridMismatch,
    SequenceTooLong,
    NonFiniteUpdate,
    // model / training
    ShapeMismatch,
    EmptyDataset,
    InconsistentJoints,
    VersionMismatch,
    // metrics
    DegenerateFrame,
    TooFewFrames,
    TooFewHypotheses,
    SingularCovariance,
    // toy experiment
    NonPSDAfterJitter,
    // config surface
    InvalidConfig,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::CyclicHierarchy: return "CyclicHierarchy";
        case ErrorCode::MultipleRoots: return "MultipleRoots";
        case ErrorCode::TooFewJoints: return "TooFewJoints";
        case ErrorCode::InvalidMotion: return "InvalidMotion";
        case ErrorCode::InvalidCamera: return "InvalidCamera";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
        case ErrorCode::CorruptHeader: return "CorruptHeader";
        case ErrorCode::AllPointsBehindCamera: return "AllPointsBehindCamera";
        case ErrorCode::PointAtCameraPlane: return "PointAtCameraPlane";
        case ErrorCode::InvalidT: return "InvalidT";
        case ErrorCode::TimestepOutOfRange: return "TimestepOutOfRange";
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::SequenceTooLong: return "SequenceTooLong";
        case ErrorCode::NonFiniteUpdate: return "NonFiniteUpdate";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::InconsistentJoints: return "InconsistentJoints";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::DegenerateFrame: return "DegenerateFrame";
        case ErrorCode::TooFewFrames: return "TooFewFrames";
        case ErrorCode::TooFewHypotheses: return "TooFewHypotheses";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::NonPSDAfterJitter: return "NonPSDAfterJitter";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

/// Exception carrying a machine-checkable error code plus a human message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void check(bool ok, ErrorCode code, const std::string& message) {
    if (!ok) raise(code, message);
}

}  // namespace platypose
