#include "odr/domain.hpp"

#include "odr/error.hpp"
#include "odr/text.hpp"

#include <algorithm>
#include <set>

namespace odr {

std::string_view to_string(Role r) noexcept
{
    switch (r) {
    case Role::PartyA: return "PartyA";
    case Role::PartyB: return "PartyB";
    case Role::Mediator: return "Mediator";
    case Role::AiMediator: return "AiMediator";
    case Role::System: return "System";
    }
    return "?";
}

std::string_view to_string(DisputeStatus s) noexcept
{
    switch (s) {
    case DisputeStatus::Open: return "Open";
    case DisputeStatus::Settled: return "Settled";
    case DisputeStatus::Closed: return "Closed";
    }
    return "?";
}

std::string_view to_string(Origin o) noexcept
{
    switch (o) {
    case Origin::HumanOriginal: return "HumanOriginal";
    case Origin::HumanAcceptedReformulation: return "HumanAcceptedReformulation";
    case Origin::HumanEditedReformulation: return "HumanEditedReformulation";
    case Origin::MediatorDraftSent: return "MediatorDraftSent";
    case Origin::MediatorDraftEdited: return "MediatorDraftEdited";
    case Origin::MediatorFreeform: return "MediatorFreeform";
    case Origin::AiAutonomous: return "AiAutonomous";
    }
    return "?";
}

std::string_view to_string(SuggestionKind k) noexcept
{
    return k == SuggestionKind::Reformulation ? "Reformulation" : "MediatorDraft";
}

std::string_view to_string(SuggestionStatus s) noexcept
{
    switch (s) {
    case SuggestionStatus::Pending: return "Pending";
    case SuggestionStatus::Accepted: return "Accepted";
    case SuggestionStatus::Edited: return "Edited";
    case SuggestionStatus::SentOriginal: return "SentOriginal";
    case SuggestionStatus::Superseded: return "Superseded";
    }
    return "?";
}

std::string_view to_string(DetectionStrategy s) noexcept
{
    switch (s) {
    case DetectionStrategy::KeywordScan: return "KeywordScan";
    case DetectionStrategy::ManualRequest: return "ManualRequest";
    case DetectionStrategy::LlmClassifier: return "LlmClassifier";
    case DetectionStrategy::SentimentModel: return "SentimentModel";
    }
    return "?";
}

std::string_view to_string(TriggerKind k) noexcept
{
    switch (k) {
    case TriggerKind::PartyRequest: return "PartyRequest";
    case TriggerKind::Inactivity: return "Inactivity";
    case TriggerKind::EveryN: return "EveryN";
    case TriggerKind::Heated: return "Heated";
    }
    return "?";
}

bool is_party(Role r) noexcept
{
    return r == Role::PartyA || r == Role::PartyB;
}

bool requires_suggestion(Origin o) noexcept
{
    switch (o) {
    case Origin::HumanAcceptedReformulation:
    case Origin::HumanEditedReformulation:
    case Origin::MediatorDraftSent:
    case Origin::MediatorDraftEdited:
        return true;
    default:
        return false;
    }
}

bool TriggerPolicySet::enabled(TriggerKind kind) const noexcept
{
    switch (kind) {
    case TriggerKind::PartyRequest: return party_request.enabled;
    case TriggerKind::Inactivity: return inactivity.enabled;
    case TriggerKind::EveryN: return every_n.enabled;
    case TriggerKind::Heated: return heated.enabled;
    }
    return false;
}

void TriggerPolicySet::validate() const
{
    if (every_n.n < 1) {
        throw Error(ErrorCode::InvalidArgument, "every_n.n must be >= 1");
    }
    if (inactivity.threshold <= milliseconds::zero()) {
        throw Error(ErrorCode::InvalidArgument, "inactivity.threshold must be positive");
    }
    if (heated.detector != DetectionStrategy::KeywordScan &&
        heated.detector != DetectionStrategy::LlmClassifier) {
        throw Error(ErrorCode::InvalidArgument,
                    "heated.detector must be KeywordScan or LlmClassifier");
    }
}

const Participant* Dispute::find_participant(const ParticipantId& pid) const noexcept
{
    auto it = std::find_if(participants.begin(), participants.end(),
                           [&](const Participant& p) { return p.id == pid; });
    return it == participants.end() ? nullptr : &*it;
}

const Participant* Dispute::holder(Role role) const noexcept
{
    auto it = std::find_if(participants.begin(), participants.end(),
                           [&](const Participant& p) { return p.role == role; });
    return it == participants.end() ? nullptr : &*it;
}

const Suggestion* Dispute::find_suggestion(const SuggestionId& sid) const noexcept
{
    auto it = std::find_if(suggestions.begin(), suggestions.end(),
                           [&](const Suggestion& s) { return s.id == sid; });
    return it == suggestions.end() ? nullptr : &*it;
}

Suggestion* Dispute::find_suggestion(const SuggestionId& sid) noexcept
{
    auto it = std::find_if(suggestions.begin(), suggestions.end(),
                           [&](const Suggestion& s) { return s.id == sid; });
    return it == suggestions.end() ? nullptr : &*it;
}

const Message* Dispute::find_message(const MessageId& mid) const noexcept
{
    auto it = std::find_if(messages.begin(), messages.end(),
                           [&](const Message& m) { return m.id == mid; });
    return it == messages.end() ? nullptr : &*it;
}

namespace {

void check_participant_info(const ParticipantInfo& p, std::string_view what)
{
    if (p.id.empty() || text::is_blank(p.id.str())) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " id must not be empty");
    }
    if (p.id == kAiMediatorId) {
        throw Error(ErrorCode::InvalidArgument,
                    std::string(what) + " id '" + p.id.str() + "' is reserved");
    }
}

std::string display_or_id(const ParticipantInfo& p)
{
    return text::is_blank(p.display_name) ? p.id.str() : p.display_name;
}

} // namespace

Dispute create_dispute(DisputeId id, std::string title, ParticipantInfo party_a,
                       ParticipantInfo party_b, TriggerPolicySet policy, Timestamp now)
{
    if (text::is_blank(title)) {
        throw Error(ErrorCode::InvalidArgument, "title must not be empty");
    }
    check_participant_info(party_a, "party_a");
    check_participant_info(party_b, "party_b");
    if (party_a.id == party_b.id) {
        throw Error(ErrorCode::DuplicateParticipant,
                    "party_a and party_b are the same participant: " + party_a.id.str());
    }
    policy.validate();

    Dispute d;
    d.id = std::move(id);
    d.title = std::move(title);
    d.participants.push_back({party_a.id, display_or_id(party_a), Role::PartyA});
    d.participants.push_back({party_b.id, display_or_id(party_b), Role::PartyB});
    d.participants.push_back({kAiMediatorId, std::string(kAiMediatorName), Role::AiMediator});
    d.status = DisputeStatus::Open;
    d.policy = policy;
    d.created_at = now;
    return d;
}

const Participant& attach_mediator(Dispute& dispute, ParticipantInfo mediator)
{
    if (!dispute.open()) {
        throw Error(ErrorCode::DisputeClosed, "dispute " + dispute.id.str() + " is not open");
    }
    check_participant_info(mediator, "mediator");
    if (dispute.holder(Role::Mediator) != nullptr) {
        throw Error(ErrorCode::InvalidArgument, "dispute already has a mediator");
    }
    if (dispute.find_participant(mediator.id) != nullptr) {
        throw Error(ErrorCode::DuplicateParticipant,
                    "participant " + mediator.id.str() + " already in dispute");
    }
    dispute.participants.push_back({mediator.id, display_or_id(mediator), Role::Mediator});
    return dispute.participants.back();
}

void check_origin(Role author_role, Origin origin, bool has_suggestion)
{
    if (requires_suggestion(origin) != has_suggestion) {
        throw Error(ErrorCode::InvalidOrigin,
                    std::string("origin ") + std::string(to_string(origin)) +
                        (has_suggestion ? " must not" : " must") + " carry a suggestion link");
    }
    bool role_ok = false;
    switch (origin) {
    case Origin::HumanOriginal:
    case Origin::HumanAcceptedReformulation:
    case Origin::HumanEditedReformulation:
        role_ok = is_party(author_role);
        break;
    case Origin::MediatorDraftSent:
    case Origin::MediatorDraftEdited:
    case Origin::MediatorFreeform:
        role_ok = author_role == Role::Mediator;
        break;
    case Origin::AiAutonomous:
        role_ok = author_role == Role::AiMediator;
        break;
    }
    if (!role_ok) {
        throw Error(ErrorCode::InvalidOrigin, std::string("origin ") +
                                                  std::string(to_string(origin)) +
                                                  " is not valid for role " +
                                                  std::string(to_string(author_role)));
    }
}

const Message& append_message(Dispute& dispute, MessageId id, const ParticipantId& author,
                              std::string body, Origin origin,
                              std::optional<SuggestionId> suggestion_id, Timestamp now)
{
    if (!dispute.open()) {
        throw Error(ErrorCode::DisputeClosed, "dispute " + dispute.id.str() + " is not open");
    }
    const Participant* p = dispute.find_participant(author);
    if (p == nullptr) {
        throw Error(ErrorCode::NotAParticipant,
                    author.str() + " is not a participant of " + dispute.id.str());
    }
    if (text::is_blank(body)) {
        throw Error(ErrorCode::InvalidArgument, "message body must not be empty");
    }
    check_origin(p->role, origin, suggestion_id.has_value());

    Message m;
    m.id = std::move(id);
    m.dispute_id = dispute.id;
    m.seq = dispute.last_seq() + 1;
    m.author = author;
    m.author_role = p->role;
    m.body = std::move(body);
    m.sent_at = now;
    m.origin = origin;
    m.suggestion_id = std::move(suggestion_id);
    dispute.messages.push_back(std::move(m));
    return dispute.messages.back();
}

void change_status(Dispute& dispute, const ParticipantId& actor, DisputeStatus status)
{
    const Participant* p = dispute.find_participant(actor);
    if (p == nullptr || !(is_party(p->role) || p->role == Role::Mediator)) {
        throw Error(ErrorCode::NotAParticipant,
                    actor.str() + " may not change the status of " + dispute.id.str());
    }
    if (!dispute.open()) {
        throw Error(ErrorCode::DisputeClosed, "dispute " + dispute.id.str() + " is not open");
    }
    if (status == DisputeStatus::Open) {
        throw Error(ErrorCode::InvalidArgument, "dispute is already open");
    }
    dispute.status = status;
}

std::vector<SuggestionId> add_suggestion(Dispute& dispute, Suggestion suggestion, Timestamp now)
{
    if (!dispute.open()) {
        throw Error(ErrorCode::DisputeClosed, "dispute " + dispute.id.str() + " is not open");
    }
    if (suggestion.status != SuggestionStatus::Pending) {
        throw Error(ErrorCode::InvalidArgument, "new suggestions must be Pending");
    }
    if (suggestion.kind == SuggestionKind::Reformulation && !suggestion.original_text) {
        throw Error(ErrorCode::InvalidArgument, "reformulation requires original_text");
    }
    if (suggestion.kind == SuggestionKind::MediatorDraft && !suggestion.context_snapshot) {
        throw Error(ErrorCode::InvalidArgument, "mediator draft requires context_snapshot");
    }
    if (dispute.find_suggestion(suggestion.id) != nullptr) {
        throw Error(ErrorCode::InvalidArgument, "duplicate suggestion id " + suggestion.id.str());
    }

    std::vector<SuggestionId> superseded;
    if (suggestion.kind == SuggestionKind::Reformulation) {
        for (auto& s : dispute.suggestions) {
            if (s.kind == SuggestionKind::Reformulation && s.pending() &&
                s.requester == suggestion.requester) {
                finish_suggestion(s, SuggestionStatus::Superseded, now, std::nullopt);
                superseded.push_back(s.id);
            }
        }
    }
    suggestion.dispute_id = dispute.id;
    dispute.suggestions.push_back(std::move(suggestion));
    return superseded;
}

void finish_suggestion(Suggestion& suggestion, SuggestionStatus terminal, Timestamp now,
                       std::optional<MessageId> resulting_message)
{
    if (!suggestion.pending()) {
        throw Error(ErrorCode::AlreadyResolved,
                    "suggestion " + suggestion.id.str() + " is already " +
                        std::string(to_string(suggestion.status)));
    }
    if (terminal == SuggestionStatus::Pending) {
        throw Error(ErrorCode::InvalidArgument, "terminal state required");
    }
    suggestion.status = terminal;
    suggestion.resolved_at = now;
    suggestion.resulting_message = std::move(resulting_message);
}

std::vector<std::string> check_invariants(const Dispute& d)
{
    std::vector<std::string> out;
    auto fail = [&](std::string msg) { out.push_back(d.id.str() + ": " + std::move(msg)); };

    int party_a = 0, party_b = 0, mediators = 0;
    std::set<ParticipantId> ids;
    for (const auto& p : d.participants) {
        party_a += p.role == Role::PartyA;
        party_b += p.role == Role::PartyB;
        mediators += p.role == Role::Mediator;
        if (!ids.insert(p.id).second) fail("duplicate participant " + p.id.str());
    }
    if (party_a != 1 || party_b != 1) fail("expected exactly one PartyA and one PartyB");
    if (mediators > 1) fail("more than one mediator");

    for (std::size_t i = 0; i < d.messages.size(); ++i) {
        const auto& m = d.messages[i];
        if (m.seq != i + 1) fail("gap or disorder at seq " + std::to_string(m.seq));
        if (m.dispute_id != d.id) fail("message " + m.id.str() + " belongs elsewhere");
        if (text::is_blank(m.body)) fail("empty body in " + m.id.str());
        const Participant* p = d.find_participant(m.author);
        if (p == nullptr || p->role != m.author_role) fail("bad author on " + m.id.str());
        if (requires_suggestion(m.origin) != m.suggestion_id.has_value()) {
            fail("origin/link mismatch on " + m.id.str());
        }
        if ((m.origin == Origin::AiAutonomous) != (m.author_role == Role::AiMediator)) {
            fail("AI provenance mismatch on " + m.id.str());
        }
        if (m.suggestion_id) {
            const Suggestion* s = d.find_suggestion(*m.suggestion_id);
            if (s == nullptr) {
                fail("dangling suggestion link on " + m.id.str());
            } else if (s->resulting_message != m.id) {
                fail("suggestion " + s->id.str() + " does not point back at " + m.id.str());
            }
        }
    }

    std::set<ParticipantId> pending_reformulation;
    for (const auto& s : d.suggestions) {
        if (s.kind == SuggestionKind::Reformulation && !s.original_text) {
            fail("reformulation without original text: " + s.id.str());
        }
        if (s.kind == SuggestionKind::MediatorDraft && !s.context_snapshot) {
            fail("draft without context: " + s.id.str());
        }
        if (s.kind == SuggestionKind::Reformulation && s.pending() &&
            !pending_reformulation.insert(s.requester).second) {
            fail("two pending reformulations for " + s.requester.str());
        }
        if (s.pending() && (s.resolved_at || s.resulting_message)) {
            fail("pending suggestion has resolution data: " + s.id.str());
        }
        bool sends = s.status == SuggestionStatus::Accepted || s.status == SuggestionStatus::Edited ||
                     s.status == SuggestionStatus::SentOriginal;
        if (sends != s.resulting_message.has_value()) {
            fail("resolution/message mismatch on " + s.id.str());
        }
        if (s.resulting_message && d.find_message(*s.resulting_message) == nullptr) {
            fail("suggestion " + s.id.str() + " points at a missing message");
        }
    }
    return out;
}

} // namespace odr
