#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpgadiag {

enum class ErrorCode {
    ZeroDimension,
    OutOfGrid,
    NodeNotOnPath,
    InvalidConfig,
    SingularCovariance,
    InvalidUpsetTarget,
    FunctionalPathViolation,
    EmptyPhaseRange,
    TapNotAssigned,
    MissingBaseline,
    EmptySchedule,
    DuplicateRecord,
    MalformedCsv,
    GapInPhaseGrid,
    EmptyInput,
    TransitionOutOfRange,
    InsufficientSweeps,
    ZeroVarianceSeries,
    TooFewPairs,
    SubsetTooLarge,
    ZeroVarianceReference,
    UnknownKey,
    TypeMismatch,
    MissingSection,
    ConstraintViolation,
    EmptyGrid,
    Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class DiagError : public std::runtime_error {
public:
    DiagError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace fpgadiag
