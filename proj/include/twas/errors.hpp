#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twas {

enum class ErrorCode {
    MissingColumn,
    DuplicateSnp,
    NonFiniteZ,
    MalformedAllele,
    MalformedRecord,
    RaggedRow,
    ValueOutOfRange,
    IdMismatch,
    TooFewSamples,
    EmptyPanel,
    LambdaOutOfRange,
    SingularMatrix,
    NoConvergence,
    DenominatorTooSmall,
    DimensionMismatch,
    POutOfRange,
    EmptyInput,
    ParamOutOfRange,
    LengthMismatch,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Data error raised by every module. The message names the offending input
// (file and line where one exists).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace twas
