#include "twas/errors.hpp"

namespace twas {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateSnp: return "DuplicateSnp";
    case ErrorCode::NonFiniteZ: return "NonFiniteZ";
    case ErrorCode::MalformedAllele: return "MalformedAllele";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyPanel: return "EmptyPanel";
    case ErrorCode::LambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DenominatorTooSmall: return "DenominatorTooSmall";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::POutOfRange: return "POutOfRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

} // namespace twas
