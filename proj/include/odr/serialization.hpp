#pragma once

#include "odr/domain.hpp"

#include <nlohmann/json.hpp>

// JSON mapping for the domain types. Shared by the event log, the HTTP
// API and the config loader so that all three agree on field names.
namespace odr {

using json = nlohmann::json;

template <class Tag>
void to_json(json& j, const Id<Tag>& id) { j = id.str(); }
template <class Tag>
void from_json(const json& j, Id<Tag>& id) { id = Id<Tag>(j.get<std::string>()); }

void to_json(json& j, Role v);
void from_json(const json& j, Role& v);
void to_json(json& j, DisputeStatus v);
void from_json(const json& j, DisputeStatus& v);
void to_json(json& j, Origin v);
void from_json(const json& j, Origin& v);
void to_json(json& j, SuggestionKind v);
void from_json(const json& j, SuggestionKind& v);
void to_json(json& j, SuggestionStatus v);
void from_json(const json& j, SuggestionStatus& v);
void to_json(json& j, DetectionStrategy v);
void from_json(const json& j, DetectionStrategy& v);
void to_json(json& j, TriggerKind v);
void from_json(const json& j, TriggerKind& v);

void to_json(json& j, const Participant& v);
void from_json(const json& j, Participant& v);
void to_json(json& j, const Message& v);
void from_json(const json& j, Message& v);
void to_json(json& j, const Suggestion& v);
void from_json(const json& j, Suggestion& v);
void to_json(json& j, const TriggerPolicySet& v);
void from_json(const json& j, TriggerPolicySet& v);
void to_json(json& j, const TriggerEvent& v);
void from_json(const json& j, TriggerEvent& v);

/// Full dispute: header plus messages, suggestions and trigger audit.
void to_json(json& j, const Dispute& v);
void from_json(const json& j, Dispute& v);

/// Header only (no messages, suggestions or triggers); the payload of a
/// DisputeCreated event.
json dispute_header_json(const Dispute& d);

} // namespace odr
