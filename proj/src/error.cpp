#include "odr/error.hpp"

namespace odr {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DuplicateParticipant: return "DuplicateParticipant";
    case ErrorCode::NotAParticipant: return "NotAParticipant";
    case ErrorCode::NotAParty: return "NotAParty";
    case ErrorCode::NotMediator: return "NotMediator";
    case ErrorCode::NotRequester: return "NotRequester";
    case ErrorCode::InvalidOrigin: return "InvalidOrigin";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::DisputeClosed: return "DisputeClosed";
    case ErrorCode::AlreadyResolved: return "AlreadyResolved";
    case ErrorCode::UnknownDispute: return "UnknownDispute";
    case ErrorCode::UnknownSuggestion: return "UnknownSuggestion";
    case ErrorCode::EmptyDraft: return "EmptyDraft";
    case ErrorCode::EmptyEdit: return "EmptyEdit";
    case ErrorCode::EmptyContext: return "EmptyContext";
    case ErrorCode::SystemPromptTooLarge: return "SystemPromptTooLarge";
    case ErrorCode::PolicyDisabled: return "PolicyDisabled";
    case ErrorCode::ReformulationUnavailable: return "ReformulationUnavailable";
    case ErrorCode::MissingApiKey: return "MissingApiKey";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::ProviderRejected: return "ProviderRejected";
    case ErrorCode::EmptyCompletion: return "EmptyCompletion";
    case ErrorCode::Cancelled: return "Cancelled";
    case ErrorCode::UnparseableAnswer: return "UnparseableAnswer";
    case ErrorCode::ScriptParseError: return "ScriptParseError";
    case ErrorCode::LexiconParseError: return "LexiconParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::StorageFull: return "StorageFull";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::SerializationError: return "SerializationError";
    case ErrorCode::CorruptLog: return "CorruptLog";
    }
    return "Unknown";
}

bool is_provider_error(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::MissingApiKey:
    case ErrorCode::Timeout:
    case ErrorCode::RateLimited:
    case ErrorCode::ProviderRejected:
    case ErrorCode::EmptyCompletion:
    case ErrorCode::Cancelled:
        return true;
    default:
        return false;
    }
}

} // namespace odr
