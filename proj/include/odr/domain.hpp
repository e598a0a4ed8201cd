#pragma once

#include "odr/time.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace odr {

/// Opaque string identifier; the tag keeps dispute, message, suggestion and
/// participant ids from being mixed up.
template <class Tag>
class Id {
public:
    Id() = default;
    explicit Id(std::string value) : value_(std::move(value)) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    friend auto operator<=>(const Id&, const Id&) = default;
    friend bool operator==(const Id&, const Id&) = default;

private:
    std::string value_;
};

using DisputeId = Id<struct DisputeIdTag>;
using MessageId = Id<struct MessageIdTag>;
using SuggestionId = Id<struct SuggestionIdTag>;
using ParticipantId = Id<struct ParticipantIdTag>;

enum class Role { PartyA, PartyB, Mediator, AiMediator, System };

enum class DisputeStatus { Open, Settled, Closed };

enum class Origin {
    HumanOriginal,
    HumanAcceptedReformulation,
    HumanEditedReformulation,
    MediatorDraftSent,
    MediatorDraftEdited,
    MediatorFreeform,
    AiAutonomous,
};

enum class SuggestionKind { Reformulation, MediatorDraft };

enum class SuggestionStatus { Pending, Accepted, Edited, SentOriginal, Superseded };

/// SentimentModel is an extension seam only; no model ships with it.
enum class DetectionStrategy { KeywordScan, ManualRequest, LlmClassifier, SentimentModel };

enum class TriggerKind { PartyRequest, Inactivity, EveryN, Heated };

std::string_view to_string(Role) noexcept;
std::string_view to_string(DisputeStatus) noexcept;
std::string_view to_string(Origin) noexcept;
std::string_view to_string(SuggestionKind) noexcept;
std::string_view to_string(SuggestionStatus) noexcept;
std::string_view to_string(DetectionStrategy) noexcept;
std::string_view to_string(TriggerKind) noexcept;

bool is_party(Role r) noexcept;
/// Origins that must carry a suggestion link.
bool requires_suggestion(Origin o) noexcept;

/// Fixed id of the synthetic participant that authors autonomous messages.
inline const ParticipantId kAiMediatorId{"ai-mediator"};
inline constexpr std::string_view kAiMediatorName = "AI Mediator";

struct ParticipantInfo {
    ParticipantId id;
    std::string display_name;
};

struct Participant {
    ParticipantId id;
    std::string display_name;
    Role role = Role::PartyA;

    friend bool operator==(const Participant&, const Participant&) = default;
};

struct Message {
    MessageId id;
    DisputeId dispute_id;
    std::uint64_t seq = 0;
    ParticipantId author;
    Role author_role = Role::PartyA;
    std::string body;
    Timestamp sent_at{};
    Origin origin = Origin::HumanOriginal;
    std::optional<SuggestionId> suggestion_id;

    bool ai_generated() const noexcept { return origin == Origin::AiAutonomous; }

    friend bool operator==(const Message&, const Message&) = default;
};

struct Suggestion {
    SuggestionId id;
    DisputeId dispute_id;
    SuggestionKind kind = SuggestionKind::Reformulation;
    ParticipantId requester;
    std::optional<std::string> original_text;             // Reformulation only
    std::optional<std::vector<MessageId>> context_snapshot; // MediatorDraft only
    std::optional<std::string> instructions;
    std::string generated_text;
    SuggestionStatus status = SuggestionStatus::Pending;
    Timestamp created_at{};
    std::optional<Timestamp> resolved_at;
    std::optional<MessageId> resulting_message;

    bool pending() const noexcept { return status == SuggestionStatus::Pending; }

    friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

struct TriggerPolicySet {
    struct PartyRequest {
        bool enabled = true;
        friend bool operator==(const PartyRequest&, const PartyRequest&) = default;
    } party_request;
    struct Inactivity {
        bool enabled = false;
        milliseconds threshold{std::chrono::minutes(60)};
        friend bool operator==(const Inactivity&, const Inactivity&) = default;
    } inactivity;
    struct EveryN {
        bool enabled = false;
        std::uint32_t n = 10;
        friend bool operator==(const EveryN&, const EveryN&) = default;
    } every_n;
    struct Heated {
        bool enabled = false;
        DetectionStrategy detector = DetectionStrategy::KeywordScan;
        friend bool operator==(const Heated&, const Heated&) = default;
    } heated;

    bool enabled(TriggerKind kind) const noexcept;

    /// Throws InvalidArgument when n < 1, threshold <= 0, or the heated
    /// detector is not a per-message strategy.
    void validate() const;

    friend bool operator==(const TriggerPolicySet&, const TriggerPolicySet&) = default;
};

struct TriggerEvent {
    TriggerKind kind = TriggerKind::PartyRequest;
    DisputeId dispute_id;
    Timestamp fired_at{};
    std::string cause;

    friend bool operator==(const TriggerEvent&, const TriggerEvent&) = default;
};

/// One negotiation room. Holds the full message log, every suggestion ever
/// created in it and the audit trail of fired triggers.
struct Dispute {
    DisputeId id;
    std::string title;
    std::vector<Participant> participants;
    std::vector<Message> messages; // seq order, seq == index + 1
    std::vector<Suggestion> suggestions;
    std::vector<TriggerEvent> triggers;
    DisputeStatus status = DisputeStatus::Open;
    TriggerPolicySet policy;
    Timestamp created_at{};

    const Participant* find_participant(const ParticipantId& id) const noexcept;
    const Participant* holder(Role role) const noexcept;
    const Suggestion* find_suggestion(const SuggestionId& id) const noexcept;
    Suggestion* find_suggestion(const SuggestionId& id) noexcept;
    const Message* find_message(const MessageId& id) const noexcept;
    std::uint64_t last_seq() const noexcept { return messages.size(); }
    bool open() const noexcept { return status == DisputeStatus::Open; }

    friend bool operator==(const Dispute&, const Dispute&) = default;
};

// Domain operations. They mutate a Dispute value in place and throw odr::Error
// on any precondition failure, leaving the dispute untouched.

Dispute create_dispute(DisputeId id, std::string title, ParticipantInfo party_a,
                       ParticipantInfo party_b, TriggerPolicySet policy, Timestamp now);

const Participant& attach_mediator(Dispute& dispute, ParticipantInfo mediator);

/// Throws InvalidOrigin when origin, author role and suggestion link disagree.
void check_origin(Role author_role, Origin origin, bool has_suggestion);

const Message& append_message(Dispute& dispute, MessageId id, const ParticipantId& author,
                              std::string body, Origin origin,
                              std::optional<SuggestionId> suggestion_id, Timestamp now);

void change_status(Dispute& dispute, const ParticipantId& actor, DisputeStatus status);

/// Adds a Pending suggestion. A new Reformulation supersedes any Pending
/// Reformulation of the same requester; the ids of superseded suggestions
/// are returned.
std::vector<SuggestionId> add_suggestion(Dispute& dispute, Suggestion suggestion, Timestamp now);

void finish_suggestion(Suggestion& suggestion, SuggestionStatus terminal, Timestamp now,
                       std::optional<MessageId> resulting_message);

/// Full scan of the structural invariants; returns a description of every
/// violation found (empty when the dispute is sound).
std::vector<std::string> check_invariants(const Dispute& dispute);

} // namespace odr

template <class Tag>
struct std::hash<odr::Id<Tag>> {
    std::size_t operator()(const odr::Id<Tag>& id) const noexcept
    {
        return std::hash<std::string>{}(id.str());
    }
};
