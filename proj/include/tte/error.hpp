#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tte {

enum class ErrorCode {
    InvalidArgument,
    // registry
    DuplicateId,
    InvalidTool,
    UnknownTool,
    CorruptSnapshot,
    ProviderMismatch,
    // retrieval / embedding
    EmptyText,
    ProviderUnavailable,
    DimensionMismatch,
    ZeroVector,
    // synthesis
    TranscriptMiss,
    MalformedDecomposition,
    DecompositionEmpty,
    SynthesisEmpty,
    MalformedToolJson,
    MalformedToolCall,
    NoFunctionFound,
    // verification / execution
    SandboxUnavailable,
    ChainExecutionFailed,
    // metrics
    UnparseableNumber,
    EmptyLibrary,
    LengthMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tte
