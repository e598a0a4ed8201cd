#pragma once

#include "odr/detection.hpp"
#include "odr/domain.hpp"
#include "odr/event_log.hpp"
#include "odr/prompting.hpp"
#include "odr/provider.hpp"
#include "odr/time.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace odr {

struct EngineOptions {
    std::size_t context_window = kDefaultContextWindow;
    std::uint32_t max_context_tokens = 8192;
    std::uint32_t max_completion_tokens = 1024;
    bool keyword_scan = true;
    bool llm_classifier = false;
};

struct SubmitOutcome {
    std::variant<Message, Suggestion> value;

    bool sent() const noexcept { return std::holds_alternative<Message>(value); }
    const Message& message() const { return std::get<Message>(value); }
    const Suggestion& suggestion() const { return std::get<Suggestion>(value); }
};

struct Resolution {
    enum class Action { SendOriginal, SendReformulated, SendEdited };

    Action action = Action::SendReformulated;
    std::string edited_text; // SendEdited only

    static Resolution send_original() { return {Action::SendOriginal, {}}; }
    static Resolution send_reformulated() { return {Action::SendReformulated, {}}; }
    static Resolution send_edited(std::string text) { return {Action::SendEdited, std::move(text)}; }
};

std::string_view to_string(Resolution::Action) noexcept;
Resolution::Action resolution_action_from_string(std::string_view s);

/// Orchestrates reformulation suggestions, mediator drafts and autonomous
/// interventions on top of the domain model.
///
/// Each dispute has a single writer: mutations take the dispute's writer
/// lock, build the next state on a copy, durably append the resulting
/// events and only then publish the new state. Readers get an immutable
/// snapshot without blocking writers. Provider calls run outside the lock
/// on a snapshot; the commit step re-validates its preconditions.
class MediationEngine {
public:
    using EventListener = std::function<void(const EventRecord&)>;

    MediationEngine(EngineOptions options, std::shared_ptr<ChatProvider> provider,
                    std::shared_ptr<const Lexicon> lexicon, std::shared_ptr<EventLog> log,
                    std::shared_ptr<const Clock> clock);

    /// Called for every appended event, in event_seq order per dispute,
    /// while the dispute's writer lock is held.
    void set_event_listener(EventListener listener);

    void replace_lexicon(std::shared_ptr<const Lexicon> lexicon);
    std::shared_ptr<const Lexicon> lexicon() const;

    Dispute create_dispute(std::string title, ParticipantInfo party_a, ParticipantInfo party_b,
                           TriggerPolicySet policy = {},
                           std::optional<ParticipantInfo> mediator = std::nullopt);
    Participant attach_mediator(const DisputeId& dispute, ParticipantInfo mediator);
    void change_status(const DisputeId& dispute, const ParticipantId& actor, DisputeStatus status);

    std::shared_ptr<const Dispute> snapshot(const DisputeId& dispute) const;
    std::vector<DisputeId> dispute_ids() const;
    Suggestion suggestion(const SuggestionId& id) const;

    /// F1 pipeline: sends the body unless detection flags it (and force_send
    /// is false), in which case a Pending Reformulation is offered and no
    /// message is appended. Provider failure surfaces as
    /// ReformulationUnavailable so the caller can resend with force_send.
    SubmitOutcome submit_party_message(const DisputeId& dispute, const ParticipantId& party,
                                       std::string body, bool force_send);

    /// Manual F1 path; ignores the detector.
    Suggestion request_reformulation(const DisputeId& dispute, const ParticipantId& party,
                                     std::string body);

    Message resolve_suggestion(const SuggestionId& suggestion, const ParticipantId& actor,
                               const Resolution& resolution);

    /// Mediator message typed without a draft.
    Message post_mediator_message(const DisputeId& dispute, const ParticipantId& mediator,
                                  std::string body);

    /// F2: draft over the last context-window messages.
    Suggestion draft_intervention(const DisputeId& dispute, const ParticipantId& mediator,
                                  std::optional<std::string> instructions = std::nullopt);

    /// F3 PartyRequest trigger on behalf of a party.
    Message request_ai_intervention(const DisputeId& dispute, const ParticipantId& requester);

    /// F3: generates and sends an AI-authored message for an enabled
    /// trigger, recording the trigger in the audit log.
    Message autonomous_intervene(const DisputeId& dispute, const TriggerEvent& trigger);

    std::vector<TriggerEvent> evaluate_triggers(const DisputeId& dispute, Timestamp now) const;

    /// One poller tick: evaluates every open dispute and intervenes at most
    /// once per dispute. Provider failures are logged and skipped.
    std::vector<Message> run_trigger_pass();

    std::vector<EventRecord> events_since(const DisputeId& dispute, std::uint64_t since) const;

    const EngineOptions& options() const noexcept { return options_; }
    const Clock& clock() const noexcept { return *clock_; }

private:
    struct Slot;
    class Commit;

    std::shared_ptr<Slot> slot(const DisputeId& id) const;
    std::shared_ptr<Slot> slot_for_suggestion(const SuggestionId& id) const;
    void restore_from_log();

    MessageId next_message_id();
    SuggestionId next_suggestion_id();

    bool detect_heat(std::string_view body, DetectionStrategy strategy) const;
    bool should_offer_reformulation(std::string_view body) const;
    std::string generate(const PromptBundle& bundle);

    template <class Fn>
    auto mutate(Slot& slot, Fn&& fn);

    EngineOptions options_;
    std::shared_ptr<ChatProvider> provider_;
    std::shared_ptr<EventLog> log_;
    std::shared_ptr<const Clock> clock_;

    mutable std::mutex lexicon_mutex_;
    std::shared_ptr<const Lexicon> lexicon_;

    mutable std::mutex registry_mutex_;
    std::unordered_map<DisputeId, std::shared_ptr<Slot>> disputes_;
    std::unordered_map<SuggestionId, DisputeId> suggestion_index_;
    std::vector<DisputeId> creation_order_;

    std::atomic<std::uint64_t> dispute_counter_{0};
    std::atomic<std::uint64_t> message_counter_{0};
    std::atomic<std::uint64_t> suggestion_counter_{0};

    EventListener listener_;
};

} // namespace odr
