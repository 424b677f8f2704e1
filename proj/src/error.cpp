#include "tte/error.hpp"

namespace tte {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::InvalidTool: return "InvalidTool";
        case ErrorCode::UnknownTool: return "UnknownTool";
        case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
        case ErrorCode::ProviderMismatch: return "ProviderMismatch";
        case ErrorCode::EmptyText: return "EmptyText";
        case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::TranscriptMiss: return "TranscriptMiss";
        case ErrorCode::MalformedDecomposition: return "MalformedDecomposition";
        case ErrorCode::DecompositionEmpty: return "DecompositionEmpty";
        case ErrorCode::SynthesisEmpty: return "SynthesisEmpty";
        case ErrorCode::MalformedToolJson: return "MalformedToolJson";
        case ErrorCode::MalformedToolCall: return "MalformedToolCall";
        case ErrorCode::NoFunctionFound: return "NoFunctionFound";
        case ErrorCode::SandboxUnavailable: return "SandboxUnavailable";
        case ErrorCode::ChainExecutionFailed: return "ChainExecutionFailed";
        case ErrorCode::UnparseableNumber: return "UnparseableNumber";
        case ErrorCode::EmptyLibrary: return "EmptyLibrary";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
    }
    return "Unknown";
}

}  // namespace tte
