#include "odr/engine.hpp"

#include "odr/error.hpp"
#include "odr/serialization.hpp"
#include "odr/text.hpp"
#include "odr/triggers.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <type_traits>

namespace odr {

std::string_view to_string(Resolution::Action a) noexcept
{
    switch (a) {
    case Resolution::Action::SendOriginal: return "SendOriginal";
    case Resolution::Action::SendReformulated: return "SendReformulated";
    case Resolution::Action::SendEdited: return "SendEdited";
    }
    return "?";
}

Resolution::Action resolution_action_from_string(std::string_view s)
{
    for (auto a : {Resolution::Action::SendOriginal, Resolution::Action::SendReformulated,
                   Resolution::Action::SendEdited}) {
        if (to_string(a) == s) return a;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown action: " + std::string(s));
}

struct MediationEngine::Slot {
    std::mutex writer;
    mutable std::mutex read_mutex;
    std::shared_ptr<const Dispute> current;

    std::shared_ptr<const Dispute> load() const
    {
        std::lock_guard lock(read_mutex);
        return current;
    }
    void store(std::shared_ptr<const Dispute> next)
    {
        std::lock_guard lock(read_mutex);
        current = std::move(next);
    }
};

/// Events produced by one mutation, appended to the log as a single batch.
class MediationEngine::Commit {
public:
    Commit(const DisputeId& id, Timestamp now) : id_(id), now_(now) {}

    void add(EventKind kind, json payload)
    {
        events_.push_back({id_, kind, std::move(payload), now_});
    }
    Timestamp now() const noexcept { return now_; }
    std::vector<NewEvent> take() { return std::move(events_); }

private:
    DisputeId id_;
    Timestamp now_;
    std::vector<NewEvent> events_;
};

namespace {

std::uint64_t id_suffix(const std::string& id, std::string_view prefix)
{
    if (id.size() <= prefix.size() || id.compare(0, prefix.size(), prefix) != 0) return 0;
    std::uint64_t n = 0;
    auto [ptr, ec] = std::from_chars(id.data() + prefix.size(), id.data() + id.size(), n);
    return (ec == std::errc{} && ptr == id.data() + id.size()) ? n : 0;
}

void bump_to(std::atomic<std::uint64_t>& counter, std::uint64_t value)
{
    auto cur = counter.load();
    while (cur < value && !counter.compare_exchange_weak(cur, value)) {
    }
}

const Participant& require_party(const Dispute& d, const ParticipantId& who)
{
    const Participant* p = d.find_participant(who);
    if (p == nullptr || !is_party(p->role)) {
        throw Error(ErrorCode::NotAParty, who.str() + " is not a party to " + d.id.str());
    }
    return *p;
}

const Participant& require_mediator(const Dispute& d, const ParticipantId& who)
{
    const Participant* p = d.find_participant(who);
    if (p == nullptr || p->role != Role::Mediator) {
        throw Error(ErrorCode::NotMediator, who.str() + " is not the mediator of " + d.id.str());
    }
    return *p;
}

void require_open(const Dispute& d)
{
    if (!d.open()) {
        throw Error(ErrorCode::DisputeClosed, "dispute " + d.id.str() + " is " +
                                                  std::string(to_string(d.status)));
    }
}

std::optional<std::string> normalize_instructions(std::optional<std::string> s)
{
    if (!s || text::is_blank(*s)) return std::nullopt;
    return text::trim(*s);
}

} // namespace

MediationEngine::MediationEngine(EngineOptions options, std::shared_ptr<ChatProvider> provider,
                                 std::shared_ptr<const Lexicon> lexicon,
                                 std::shared_ptr<EventLog> log, std::shared_ptr<const Clock> clock)
    : options_(options),
      provider_(std::move(provider)),
      log_(std::move(log)),
      clock_(std::move(clock)),
      lexicon_(lexicon ? std::move(lexicon) : std::make_shared<const Lexicon>())
{
    if (!provider_ || !log_ || !clock_) {
        throw Error(ErrorCode::InvalidArgument, "engine requires a provider, a log and a clock");
    }
    if (options_.context_window == 0) {
        throw Error(ErrorCode::InvalidArgument, "context window must be positive");
    }
    if (options_.max_completion_tokens >= options_.max_context_tokens) {
        throw Error(ErrorCode::InvalidArgument,
                    "max_completion_tokens must be below max_context_tokens");
    }
    restore_from_log();
}

void MediationEngine::restore_from_log()
{
    for (const auto& id : log_->disputes()) {
        auto d = log_->replay(id);
        bump_to(dispute_counter_, id_suffix(d.id.str(), "d-"));
        for (const auto& m : d.messages) bump_to(message_counter_, id_suffix(m.id.str(), "m-"));
        for (const auto& s : d.suggestions) {
            bump_to(suggestion_counter_, id_suffix(s.id.str(), "s-"));
            suggestion_index_.emplace(s.id, d.id);
        }
        auto slot = std::make_shared<Slot>();
        slot->current = std::make_shared<const Dispute>(std::move(d));
        disputes_.emplace(id, std::move(slot));
        creation_order_.push_back(id);
    }
}

void MediationEngine::set_event_listener(EventListener listener)
{
    listener_ = std::move(listener);
}

void MediationEngine::replace_lexicon(std::shared_ptr<const Lexicon> lexicon)
{
    std::lock_guard lock(lexicon_mutex_);
    lexicon_ = lexicon ? std::move(lexicon) : std::make_shared<const Lexicon>();
}

std::shared_ptr<const Lexicon> MediationEngine::lexicon() const
{
    std::lock_guard lock(lexicon_mutex_);
    return lexicon_;
}

MessageId MediationEngine::next_message_id()
{
    return MessageId("m-" + std::to_string(++message_counter_));
}

SuggestionId MediationEngine::next_suggestion_id()
{
    return SuggestionId("s-" + std::to_string(++suggestion_counter_));
}

std::shared_ptr<MediationEngine::Slot> MediationEngine::slot(const DisputeId& id) const
{
    std::lock_guard lock(registry_mutex_);
    auto it = disputes_.find(id);
    if (it == disputes_.end()) {
        throw Error(ErrorCode::UnknownDispute, "no such dispute: " + id.str());
    }
    return it->second;
}

std::shared_ptr<MediationEngine::Slot> MediationEngine::slot_for_suggestion(const SuggestionId& id) const
{
    std::lock_guard lock(registry_mutex_);
    auto it = suggestion_index_.find(id);
    if (it == suggestion_index_.end()) {
        throw Error(ErrorCode::UnknownSuggestion, "no such suggestion: " + id.str());
    }
    return disputes_.at(it->second);
}

template <class Fn>
auto MediationEngine::mutate(Slot& s, Fn&& fn)
{
    std::lock_guard writer(s.writer);
    auto current = s.load();
    Dispute next = *current;
    Commit commit(next.id, clock_->now());

    auto finish = [&] {
        auto records = log_->append_batch(commit.take());
        s.store(std::make_shared<const Dispute>(std::move(next)));
        if (listener_) {
            for (const auto& r : records) listener_(r);
        }
    };

    if constexpr (std::is_void_v<std::invoke_result_t<Fn, Dispute&, Commit&>>) {
        fn(next, commit);
        finish();
    } else {
        auto result = fn(next, commit);
        finish();
        return result;
    }
}

// ---------------------------------------------------------------------------

Dispute MediationEngine::create_dispute(std::string title, ParticipantInfo party_a,
                                        ParticipantInfo party_b, TriggerPolicySet policy,
                                        std::optional<ParticipantInfo> mediator)
{
    auto now = clock_->now();
    DisputeId id("d-" + std::to_string(dispute_counter_.load() + 1));
    Dispute d = odr::create_dispute(id, std::move(title), std::move(party_a), std::move(party_b),
                                    policy, now);
    if (mediator) {
        odr::attach_mediator(d, std::move(*mediator));
    }
    // The id is only consumed once the dispute is valid.
    id = DisputeId("d-" + std::to_string(++dispute_counter_));
    d.id = id;

    auto slot = std::make_shared<Slot>();
    std::lock_guard writer(slot->writer);
    auto records = log_->append_batch({NewEvent{id, EventKind::DisputeCreated, dispute_header_json(d), now}});
    slot->current = std::make_shared<const Dispute>(d);
    {
        std::lock_guard lock(registry_mutex_);
        disputes_.emplace(id, slot);
        creation_order_.push_back(id);
    }
    if (listener_) {
        for (const auto& r : records) listener_(r);
    }
    return d;
}

Participant MediationEngine::attach_mediator(const DisputeId& dispute, ParticipantInfo mediator)
{
    return mutate(*slot(dispute), [&](Dispute& d, Commit& c) {
        Participant p = odr::attach_mediator(d, std::move(mediator));
        c.add(EventKind::MediatorAttached, json(p));
        return p;
    });
}

void MediationEngine::change_status(const DisputeId& dispute, const ParticipantId& actor,
                                    DisputeStatus status)
{
    mutate(*slot(dispute), [&](Dispute& d, Commit& c) {
        odr::change_status(d, actor, status);
        c.add(EventKind::StatusChanged, json{{"status", status}, {"actor", actor}});
    });
}

std::shared_ptr<const Dispute> MediationEngine::snapshot(const DisputeId& dispute) const
{
    return slot(dispute)->load();
}

std::vector<DisputeId> MediationEngine::dispute_ids() const
{
    std::lock_guard lock(registry_mutex_);
    return creation_order_;
}

Suggestion MediationEngine::suggestion(const SuggestionId& id) const
{
    auto d = slot_for_suggestion(id)->load();
    return *d->find_suggestion(id);
}

std::string MediationEngine::generate(const PromptBundle& bundle)
{
    return provider_->complete(bundle).text;
}

bool MediationEngine::detect_heat(std::string_view body, DetectionStrategy strategy) const
{
    switch (strategy) {
    case DetectionStrategy::KeywordScan:
        return options_.keyword_scan && scan_keywords(body, *lexicon()).flagged;
    case DetectionStrategy::LlmClassifier:
        if (!options_.llm_classifier) return false;
        try {
            return classify_with_llm(body, *provider_).flagged;
        } catch (const Error& e) {
            spdlog::warn("classifier unavailable, treating message as not flagged: {}", e.what());
            return false;
        }
    case DetectionStrategy::ManualRequest:
    case DetectionStrategy::SentimentModel:
        return false;
    }
    return false;
}

bool MediationEngine::should_offer_reformulation(std::string_view body) const
{
    return detect_heat(body, DetectionStrategy::KeywordScan) ||
           detect_heat(body, DetectionStrategy::LlmClassifier);
}

// ---------------------------------------------------------------------------
// F1

SubmitOutcome MediationEngine::submit_party_message(const DisputeId& dispute,
                                                    const ParticipantId& party, std::string body,
                                                    bool force_send)
{
    auto s = slot(dispute);
    {
        auto snap = s->load();
        require_party(*snap, party);
        require_open(*snap);
        if (text::is_blank(body)) {
            throw Error(ErrorCode::InvalidArgument, "message body must not be empty");
        }
    }

    if (force_send || !should_offer_reformulation(body)) {
        Message m = mutate(*s, [&](Dispute& d, Commit& c) {
            require_party(d, party);
            const Message& m = append_message(d, next_message_id(), party, std::move(body),
                                              Origin::HumanOriginal, std::nullopt, c.now());
            c.add(EventKind::MessageAppended, json(m));
            return m;
        });
        return {std::move(m)};
    }

    std::string generated;
    try {
        generated = generate(build_reformulation_prompt(body));
    } catch (const Error& e) {
        if (!is_provider_error(e.code())) throw;
        spdlog::warn("reformulation unavailable for {}: {}", dispute.str(), e.what());
        throw Error(ErrorCode::ReformulationUnavailable,
                    std::string("reformulation unavailable, resend with force_send: ") + e.what(),
                    e.detail());
    }

    Suggestion sug = mutate(*s, [&](Dispute& d, Commit& c) {
        require_party(d, party);
        require_open(d);
        Suggestion n;
        n.id = next_suggestion_id();
        n.kind = SuggestionKind::Reformulation;
        n.requester = party;
        n.original_text = body;
        n.generated_text = std::move(generated);
        n.created_at = c.now();
        for (const auto& old : add_suggestion(d, n, c.now())) {
            c.add(EventKind::SuggestionResolved, json(*d.find_suggestion(old)));
        }
        const Suggestion& stored = d.suggestions.back();
        c.add(EventKind::SuggestionCreated, json(stored));
        return stored;
    });
    {
        std::lock_guard lock(registry_mutex_);
        suggestion_index_.emplace(sug.id, dispute);
    }
    return {std::move(sug)};
}

Suggestion MediationEngine::request_reformulation(const DisputeId& dispute,
                                                  const ParticipantId& party, std::string body)
{
    auto s = slot(dispute);
    {
        auto snap = s->load();
        require_party(*snap, party);
        require_open(*snap);
    }
    auto bundle = build_reformulation_prompt(body);
    auto generated = generate(bundle);

    Suggestion sug = mutate(*s, [&](Dispute& d, Commit& c) {
        require_party(d, party);
        require_open(d);
        Suggestion n;
        n.id = next_suggestion_id();
        n.kind = SuggestionKind::Reformulation;
        n.requester = party;
        n.original_text = std::move(body);
        n.generated_text = std::move(generated);
        n.created_at = c.now();
        for (const auto& old : add_suggestion(d, n, c.now())) {
            c.add(EventKind::SuggestionResolved, json(*d.find_suggestion(old)));
        }
        const Suggestion& stored = d.suggestions.back();
        c.add(EventKind::SuggestionCreated, json(stored));
        return stored;
    });
    {
        std::lock_guard lock(registry_mutex_);
        suggestion_index_.emplace(sug.id, dispute);
    }
    return sug;
}

Message MediationEngine::resolve_suggestion(const SuggestionId& suggestion,
                                            const ParticipantId& actor,
                                            const Resolution& resolution)
{
    return mutate(*slot_for_suggestion(suggestion), [&](Dispute& d, Commit& c) {
        Suggestion* sug = d.find_suggestion(suggestion);
        if (!sug->pending()) {
            throw Error(ErrorCode::AlreadyResolved,
                        "suggestion " + suggestion.str() + " is already " +
                            std::string(to_string(sug->status)));
        }
        const bool reformulation = sug->kind == SuggestionKind::Reformulation;
        if (reformulation) {
            if (sug->requester != actor) {
                throw Error(ErrorCode::NotRequester,
                            actor.str() + " did not request suggestion " + suggestion.str());
            }
        } else {
            const Participant* mediator = d.holder(Role::Mediator);
            if (mediator == nullptr || mediator->id != actor) {
                throw Error(ErrorCode::NotRequester,
                            actor.str() + " is not the mediator for draft " + suggestion.str());
            }
        }

        std::string body;
        Origin origin = Origin::HumanOriginal;
        SuggestionStatus terminal = SuggestionStatus::Accepted;
        std::optional<SuggestionId> link = sug->id;
        switch (resolution.action) {
        case Resolution::Action::SendOriginal:
            if (!reformulation) {
                throw Error(ErrorCode::InvalidAction, "a mediator draft has no original to send");
            }
            body = *sug->original_text;
            origin = Origin::HumanOriginal;
            terminal = SuggestionStatus::SentOriginal;
            link.reset();
            break;
        case Resolution::Action::SendReformulated:
            body = sug->generated_text;
            origin = reformulation ? Origin::HumanAcceptedReformulation : Origin::MediatorDraftSent;
            terminal = SuggestionStatus::Accepted;
            break;
        case Resolution::Action::SendEdited:
            if (text::is_blank(resolution.edited_text)) {
                throw Error(ErrorCode::EmptyEdit, "edited text must not be empty");
            }
            body = resolution.edited_text;
            origin = reformulation ? Origin::HumanEditedReformulation : Origin::MediatorDraftEdited;
            terminal = SuggestionStatus::Edited;
            break;
        }

        Message m = append_message(d, next_message_id(), actor, std::move(body), origin, link,
                                   c.now());
        // append_message does not touch suggestions, so sug is still valid.
        finish_suggestion(*sug, terminal, c.now(), m.id);
        c.add(EventKind::MessageAppended, json(m));
        c.add(EventKind::SuggestionResolved, json(*sug));
        return m;
    });
}

Message MediationEngine::post_mediator_message(const DisputeId& dispute,
                                               const ParticipantId& mediator, std::string body)
{
    return mutate(*slot(dispute), [&](Dispute& d, Commit& c) {
        require_mediator(d, mediator);
        const Message& m = append_message(d, next_message_id(), mediator, std::move(body),
                                          Origin::MediatorFreeform, std::nullopt, c.now());
        c.add(EventKind::MessageAppended, json(m));
        return m;
    });
}

// ---------------------------------------------------------------------------
// F2

Suggestion MediationEngine::draft_intervention(const DisputeId& dispute,
                                               const ParticipantId& mediator,
                                               std::optional<std::string> instructions)
{
    auto s = slot(dispute);
    instructions = normalize_instructions(std::move(instructions));
    PromptBundle bundle;
    {
        auto snap = s->load();
        require_mediator(*snap, mediator);
        require_open(*snap);
        auto history = context_from(*snap);
        bundle = build_mediator_prompt(history, instructions, options_.context_window,
                                       PromptPurpose::MediatorDraft);
    }
    bundle = estimate_and_trim(std::move(bundle),
                               options_.max_context_tokens - options_.max_completion_tokens);
    auto generated = generate(bundle);

    Suggestion sug = mutate(*s, [&](Dispute& d, Commit& c) {
        require_mediator(d, mediator);
        require_open(d);
        Suggestion n;
        n.id = next_suggestion_id();
        n.kind = SuggestionKind::MediatorDraft;
        n.requester = mediator;
        n.context_snapshot = bundle.context_message_ids;
        n.instructions = instructions;
        n.generated_text = std::move(generated);
        n.created_at = c.now();
        add_suggestion(d, n, c.now());
        const Suggestion& stored = d.suggestions.back();
        c.add(EventKind::SuggestionCreated, json(stored));
        return stored;
    });
    {
        std::lock_guard lock(registry_mutex_);
        suggestion_index_.emplace(sug.id, dispute);
    }
    return sug;
}

// ---------------------------------------------------------------------------
// F3

Message MediationEngine::request_ai_intervention(const DisputeId& dispute,
                                                 const ParticipantId& requester)
{
    auto snap = snapshot(dispute);
    const Participant& p = require_party(*snap, requester);
    TriggerEvent trigger{TriggerKind::PartyRequest, dispute, clock_->now(),
                         "requested by " + p.display_name};
    return autonomous_intervene(dispute, trigger);
}

Message MediationEngine::autonomous_intervene(const DisputeId& dispute, const TriggerEvent& trigger)
{
    if (trigger.dispute_id != dispute) {
        throw Error(ErrorCode::InvalidArgument, "trigger belongs to another dispute");
    }
    auto s = slot(dispute);
    PromptBundle bundle;
    {
        auto snap = s->load();
        if (!snap->policy.enabled(trigger.kind)) {
            throw Error(ErrorCode::PolicyDisabled, std::string(to_string(trigger.kind)) +
                                                       " interventions are disabled for " +
                                                       dispute.str());
        }
        require_open(*snap);
        auto history = context_from(*snap);
        bundle = build_mediator_prompt(history, std::nullopt, options_.context_window,
                                       PromptPurpose::AutonomousIntervention);
    }
    bundle = estimate_and_trim(std::move(bundle),
                               options_.max_context_tokens - options_.max_completion_tokens);
    auto generated = generate(bundle);

    return mutate(*s, [&](Dispute& d, Commit& c) {
        if (!d.policy.enabled(trigger.kind)) {
            throw Error(ErrorCode::PolicyDisabled, std::string(to_string(trigger.kind)) +
                                                       " interventions are disabled");
        }
        require_open(d);
        d.triggers.push_back(trigger);
        c.add(EventKind::TriggerFired, json(trigger));
        const Message& m = append_message(d, next_message_id(), kAiMediatorId,
                                          std::move(generated), Origin::AiAutonomous,
                                          std::nullopt, c.now());
        c.add(EventKind::MessageAppended, json(m));
        return m;
    });
}

std::vector<TriggerEvent> MediationEngine::evaluate_triggers(const DisputeId& dispute,
                                                             Timestamp now) const
{
    auto snap = snapshot(dispute);
    return odr::evaluate_triggers(*snap, now, [this](std::string_view body, DetectionStrategy s) {
        return detect_heat(body, s);
    });
}

std::vector<Message> MediationEngine::run_trigger_pass()
{
    std::vector<Message> sent;
    auto now = clock_->now();
    for (const auto& id : dispute_ids()) {
        std::vector<TriggerEvent> firing;
        try {
            firing = evaluate_triggers(id, now);
        } catch (const Error& e) {
            spdlog::warn("trigger evaluation failed for {}: {}", id.str(), e.what());
            continue;
        }
        if (firing.empty()) continue;
        try {
            sent.push_back(autonomous_intervene(id, firing.front()));
            spdlog::info("autonomous intervention in {} ({})", id.str(),
                         to_string(firing.front().kind));
        } catch (const Error& e) {
            spdlog::warn("autonomous intervention in {} failed: {}", id.str(), e.what());
        }
    }
    return sent;
}

std::vector<EventRecord> MediationEngine::events_since(const DisputeId& dispute,
                                                       std::uint64_t since) const
{
    slot(dispute); // UnknownDispute
    return log_->events_for(dispute, since);
}

} // namespace odr
