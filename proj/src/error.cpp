#include "fpgadiag/error.hpp"

namespace fpgadiag {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ZeroDimension: return "ZeroDimension";
        case ErrorCode::OutOfGrid: return "OutOfGrid";
        case ErrorCode::NodeNotOnPath: return "NodeNotOnPath";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::InvalidUpsetTarget: return "InvalidUpsetTarget";
        case ErrorCode::FunctionalPathViolation: return "FunctionalPathViolation";
        case ErrorCode::EmptyPhaseRange: return "EmptyPhaseRange";
        case ErrorCode::TapNotAssigned: return "TapNotAssigned";
        case ErrorCode::MissingBaseline: return "MissingBaseline";
        case ErrorCode::EmptySchedule: return "EmptySchedule";
        case ErrorCode::DuplicateRecord: return "DuplicateRecord";
        case ErrorCode::MalformedCsv: return "MalformedCsv";
        case ErrorCode::GapInPhaseGrid: return "GapInPhaseGrid";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::TransitionOutOfRange: return "TransitionOutOfRange";
        case ErrorCode::InsufficientSweeps: return "InsufficientSweeps";
        case ErrorCode::ZeroVarianceSeries: return "ZeroVarianceSeries";
        case ErrorCode::TooFewPairs: return "TooFewPairs";
        case ErrorCode::SubsetTooLarge: return "SubsetTooLarge";
        case ErrorCode::ZeroVarianceReference: return "ZeroVarianceReference";
        case ErrorCode::UnknownKey: return "UnknownKey";
        case ErrorCode::TypeMismatch: return "TypeMismatch";
        case ErrorCode::MissingSection: return "MissingSection";
        case ErrorCode::ConstraintViolation: return "ConstraintViolation";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace fpgadiag
