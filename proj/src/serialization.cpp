#include "odr/serialization.hpp"

#include "odr/error.hpp"

#include <array>

namespace odr {

namespace {

template <class E, std::size_t N>
E parse_enum(const json& j, const std::array<E, N>& values, std::string_view what)
{
    const auto& s = j.get_ref<const std::string&>();
    for (E v : values) {
        if (to_string(v) == s) return v;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown " + std::string(what) + ": " + s);
}

constexpr std::array kRoles{Role::PartyA, Role::PartyB, Role::Mediator, Role::AiMediator,
                            Role::System};
constexpr std::array kStatuses{DisputeStatus::Open, DisputeStatus::Settled, DisputeStatus::Closed};
constexpr std::array kOrigins{Origin::HumanOriginal,     Origin::HumanAcceptedReformulation,
                              Origin::HumanEditedReformulation, Origin::MediatorDraftSent,
                              Origin::MediatorDraftEdited, Origin::MediatorFreeform,
                              Origin::AiAutonomous};
constexpr std::array kKinds{SuggestionKind::Reformulation, SuggestionKind::MediatorDraft};
constexpr std::array kSuggestionStatuses{SuggestionStatus::Pending, SuggestionStatus::Accepted,
                                         SuggestionStatus::Edited, SuggestionStatus::SentOriginal,
                                         SuggestionStatus::Superseded};
constexpr std::array kStrategies{DetectionStrategy::KeywordScan, DetectionStrategy::ManualRequest,
                                 DetectionStrategy::LlmClassifier,
                                 DetectionStrategy::SentimentModel};
constexpr std::array kTriggerKinds{TriggerKind::PartyRequest, TriggerKind::Inactivity,
                                   TriggerKind::EveryN, TriggerKind::Heated};

template <class T>
void put_optional(json& j, const char* key, const std::optional<T>& v)
{
    if (v) {
        j[key] = *v;
    } else {
        j[key] = nullptr;
    }
}

template <class T>
void get_optional(const json& j, const char* key, std::optional<T>& v)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        v.reset();
    } else {
        v = it->get<T>();
    }
}

} // namespace

void to_json(json& j, Role v) { j = to_string(v); }
void from_json(const json& j, Role& v) { v = parse_enum(j, kRoles, "role"); }
void to_json(json& j, DisputeStatus v) { j = to_string(v); }
void from_json(const json& j, DisputeStatus& v) { v = parse_enum(j, kStatuses, "status"); }
void to_json(json& j, Origin v) { j = to_string(v); }
void from_json(const json& j, Origin& v) { v = parse_enum(j, kOrigins, "origin"); }
void to_json(json& j, SuggestionKind v) { j = to_string(v); }
void from_json(const json& j, SuggestionKind& v) { v = parse_enum(j, kKinds, "suggestion kind"); }
void to_json(json& j, SuggestionStatus v) { j = to_string(v); }
void from_json(const json& j, SuggestionStatus& v)
{
    v = parse_enum(j, kSuggestionStatuses, "suggestion status");
}
void to_json(json& j, DetectionStrategy v) { j = to_string(v); }
void from_json(const json& j, DetectionStrategy& v)
{
    v = parse_enum(j, kStrategies, "detection strategy");
}
void to_json(json& j, TriggerKind v) { j = to_string(v); }
void from_json(const json& j, TriggerKind& v) { v = parse_enum(j, kTriggerKinds, "trigger kind"); }

void to_json(json& j, const Participant& v)
{
    j = json{{"id", v.id}, {"display_name", v.display_name}, {"role", v.role}};
}

void from_json(const json& j, Participant& v)
{
    j.at("id").get_to(v.id);
    j.at("display_name").get_to(v.display_name);
    j.at("role").get_to(v.role);
}

void to_json(json& j, const Message& v)
{
    j = json{{"id", v.id},
             {"dispute_id", v.dispute_id},
             {"seq", v.seq},
             {"author", v.author},
             {"author_role", v.author_role},
             {"body", v.body},
             {"sent_at", format_timestamp(v.sent_at)},
             {"origin", v.origin},
             {"ai_generated", v.ai_generated()}};
    put_optional(j, "suggestion_id", v.suggestion_id);
}

void from_json(const json& j, Message& v)
{
    j.at("id").get_to(v.id);
    j.at("dispute_id").get_to(v.dispute_id);
    j.at("seq").get_to(v.seq);
    j.at("author").get_to(v.author);
    j.at("author_role").get_to(v.author_role);
    j.at("body").get_to(v.body);
    v.sent_at = parse_timestamp(j.at("sent_at").get<std::string>());
    j.at("origin").get_to(v.origin);
    get_optional(j, "suggestion_id", v.suggestion_id);
}

void to_json(json& j, const Suggestion& v)
{
    j = json{{"id", v.id},
             {"dispute_id", v.dispute_id},
             {"kind", v.kind},
             {"requester", v.requester},
             {"generated_text", v.generated_text},
             {"status", v.status},
             {"created_at", format_timestamp(v.created_at)}};
    put_optional(j, "original_text", v.original_text);
    put_optional(j, "context_snapshot", v.context_snapshot);
    put_optional(j, "instructions", v.instructions);
    put_optional(j, "resulting_message", v.resulting_message);
    if (v.resolved_at) {
        j["resolved_at"] = format_timestamp(*v.resolved_at);
    } else {
        j["resolved_at"] = nullptr;
    }
}

void from_json(const json& j, Suggestion& v)
{
    j.at("id").get_to(v.id);
    j.at("dispute_id").get_to(v.dispute_id);
    j.at("kind").get_to(v.kind);
    j.at("requester").get_to(v.requester);
    j.at("generated_text").get_to(v.generated_text);
    j.at("status").get_to(v.status);
    v.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    get_optional(j, "original_text", v.original_text);
    get_optional(j, "context_snapshot", v.context_snapshot);
    get_optional(j, "instructions", v.instructions);
    get_optional(j, "resulting_message", v.resulting_message);
    std::optional<std::string> resolved;
    get_optional(j, "resolved_at", resolved);
    v.resolved_at = resolved ? std::optional(parse_timestamp(*resolved)) : std::nullopt;
}

void to_json(json& j, const TriggerPolicySet& v)
{
    j = json{{"party_request", {{"enabled", v.party_request.enabled}}},
             {"inactivity",
              {{"enabled", v.inactivity.enabled}, {"threshold_ms", v.inactivity.threshold.count()}}},
             {"every_n", {{"enabled", v.every_n.enabled}, {"n", v.every_n.n}}},
             {"heated", {{"enabled", v.heated.enabled}, {"detector", v.heated.detector}}}};
}

// Missing keys keep their defaults so clients can send partial policies.
void from_json(const json& j, TriggerPolicySet& v)
{
    if (auto it = j.find("party_request"); it != j.end()) {
        v.party_request.enabled = it->value("enabled", v.party_request.enabled);
    }
    if (auto it = j.find("inactivity"); it != j.end()) {
        v.inactivity.enabled = it->value("enabled", v.inactivity.enabled);
        v.inactivity.threshold =
            milliseconds(it->value("threshold_ms", v.inactivity.threshold.count()));
    }
    if (auto it = j.find("every_n"); it != j.end()) {
        v.every_n.enabled = it->value("enabled", v.every_n.enabled);
        auto n = it->value("n", static_cast<std::int64_t>(v.every_n.n));
        if (n < 1 || n > UINT32_MAX) {
            throw Error(ErrorCode::InvalidArgument, "every_n.n must be >= 1");
        }
        v.every_n.n = static_cast<std::uint32_t>(n);
    }
    if (auto it = j.find("heated"); it != j.end()) {
        v.heated.enabled = it->value("enabled", v.heated.enabled);
        if (auto d = it->find("detector"); d != it->end()) d->get_to(v.heated.detector);
    }
}

void to_json(json& j, const TriggerEvent& v)
{
    j = json{{"kind", v.kind},
             {"dispute_id", v.dispute_id},
             {"fired_at", format_timestamp(v.fired_at)},
             {"cause", v.cause}};
}

void from_json(const json& j, TriggerEvent& v)
{
    j.at("kind").get_to(v.kind);
    j.at("dispute_id").get_to(v.dispute_id);
    v.fired_at = parse_timestamp(j.at("fired_at").get<std::string>());
    j.at("cause").get_to(v.cause);
}

json dispute_header_json(const Dispute& d)
{
    return json{{"id", d.id},
                {"title", d.title},
                {"participants", d.participants},
                {"status", d.status},
                {"policy", d.policy},
                {"created_at", format_timestamp(d.created_at)}};
}

void to_json(json& j, const Dispute& v)
{
    j = dispute_header_json(v);
    j["messages"] = v.messages;
    j["suggestions"] = v.suggestions;
    j["triggers"] = v.triggers;
}

void from_json(const json& j, Dispute& v)
{
    j.at("id").get_to(v.id);
    j.at("title").get_to(v.title);
    j.at("participants").get_to(v.participants);
    j.at("status").get_to(v.status);
    j.at("policy").get_to(v.policy);
    v.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    v.messages = j.value("messages", std::vector<Message>{});
    v.suggestions = j.value("suggestions", std::vector<Suggestion>{});
    v.triggers = j.value("triggers", std::vector<TriggerEvent>{});
}

} // namespace odr
