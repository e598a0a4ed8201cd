#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace odr {

enum class ErrorCode {
    InvalidArgument,
    DuplicateParticipant,
    NotAParticipant,
    NotAParty,
    NotMediator,
    NotRequester,
    InvalidOrigin,
    InvalidAction,
    DisputeClosed,
    AlreadyResolved,
    UnknownDispute,
    UnknownSuggestion,
    EmptyDraft,
    EmptyEdit,
    EmptyContext,
    SystemPromptTooLarge,
    PolicyDisabled,
    ReformulationUnavailable,
    // provider failures
    MissingApiKey,
    Timeout,
    RateLimited,
    ProviderRejected,
    EmptyCompletion,
    Cancelled,
    UnparseableAnswer,
    // files and storage
    ScriptParseError,
    LexiconParseError,
    ConfigError,
    StorageFull,
    StorageError,
    SerializationError,
    CorruptLog,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for the errors a ChatProvider may raise from complete().
bool is_provider_error(ErrorCode code) noexcept;

/// The single exception type thrown by the library. `detail` carries the
/// numeric context some codes need: line number for parse errors, byte
/// offset for CorruptLog, HTTP status for ProviderRejected.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::int64_t> detail = std::nullopt)
        : std::runtime_error(message), code_(code), detail_(detail) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::int64_t> detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::optional<std::int64_t> detail_;
};

} // namespace odr
