#include "radiomics/error.hpp"

namespace radiomics {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::NonFiniteData: return "NonFiniteData";
        case ErrorCode::DegenerateOutput: return "DegenerateOutput";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::MalformedWeights: return "MalformedWeights";
        case ErrorCode::NonFiniteWeights: return "NonFiniteWeights";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::IndivisibleDims: return "IndivisibleDims";
        case ErrorCode::EmptySamples: return "EmptySamples";
        case ErrorCode::InvalidK: return "InvalidK";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyTraining: return "EmptyTraining";
        case ErrorCode::SingleClassTraining: return "SingleClassTraining";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::NoEvents: return "NoEvents";
        case ErrorCode::ManifestInvalid: return "ManifestInvalid";
        case ErrorCode::WeightsMissing: return "WeightsMissing";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::UnknownPatient: return "UnknownPatient";
        case ErrorCode::BadMapIndex: return "BadMapIndex";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace radiomics
