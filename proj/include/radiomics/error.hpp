#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace radiomics {

enum class ErrorCode {
    MissingFile,
    MalformedHeader,
    NonFiniteData,
    DegenerateOutput,
    EmptyMask,
    MalformedWeights,
    NonFiniteWeights,
    ShapeMismatch,
    IndivisibleDims,
    EmptySamples,
    InvalidK,
    LengthMismatch,
    EmptyTraining,
    SingleClassTraining,
    DimMismatch,
    TooFewRows,
    SingleClass,
    NoEvents,
    ManifestInvalid,
    WeightsMissing,
    MissingColumn,
    DegenerateLabels,
    UnknownPatient,
    BadMapIndex,
    InvalidArgument,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can route on the kind of failure rather than the text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace radiomics
