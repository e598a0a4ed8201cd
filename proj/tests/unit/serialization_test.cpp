#include "odr/error.hpp"
#include "odr/serialization.hpp"

#include <gtest/gtest.h>

using namespace odr;

namespace {

Dispute populated()
{
    auto t = parse_timestamp("2023-06-19T10:00:00.250Z");
    auto d = create_dispute(DisputeId("d-7"), "Broken camera", {ParticipantId("john"), "John"},
                            {ParticipantId("jane"), "Jane"}, {}, t);
    attach_mediator(d, {ParticipantId("mia"), "Mia"});
    append_message(d, MessageId("m-1"), ParticipantId("jane"), "Zerbrochen – “really”",
                   Origin::HumanOriginal, std::nullopt, t);
    Suggestion s;
    s.id = SuggestionId("s-1");
    s.kind = SuggestionKind::MediatorDraft;
    s.requester = ParticipantId("mia");
    s.context_snapshot = std::vector<MessageId>{MessageId("m-1")};
    s.instructions = "be brief";
    s.generated_text = "Let us talk.";
    s.created_at = t;
    add_suggestion(d, s, t);
    const auto& m = append_message(d, MessageId("m-2"), ParticipantId("mia"), "Let us talk.",
                                   Origin::MediatorDraftSent, SuggestionId("s-1"), t);
    finish_suggestion(*d.find_suggestion(SuggestionId("s-1")), SuggestionStatus::Accepted, t, m.id);
    d.triggers.push_back({TriggerKind::PartyRequest, d.id, t, "requested by Jane"});
    d.policy.inactivity.enabled = true;
    d.policy.inactivity.threshold = std::chrono::minutes(5);
    return d;
}

} // namespace

TEST(Serialization, TimestampsRoundTrip)
{
    auto t = parse_timestamp("2023-06-19T10:00:00.250Z");
    EXPECT_EQ(format_timestamp(t), "2023-06-19T10:00:00.250Z");
    EXPECT_THROW(parse_timestamp("2023-06-19 10:00"), Error);
}

TEST(Serialization, DisputeRoundTripsFieldForField)
{
    auto d = populated();
    json j = d;
    EXPECT_EQ(j.get<Dispute>(), d);
    EXPECT_EQ(json::parse(j.dump()).get<Dispute>(), d);
}

TEST(Serialization, MessageCarriesAiLabel)
{
    auto d = populated();
    json j = d.messages[1];
    EXPECT_EQ(j.at("origin"), "MediatorDraftSent");
    EXPECT_EQ(j.at("suggestion_id"), "s-1");
    EXPECT_EQ(j.at("ai_generated"), false);
}

TEST(Serialization, UnknownEnumValuesAreRejected)
{
    EXPECT_THROW(json("Angry").get<Origin>(), Error);
    EXPECT_THROW(json("open").get<DisputeStatus>(), Error);
    EXPECT_EQ(json("Settled").get<DisputeStatus>(), DisputeStatus::Settled);
}

TEST(Serialization, PartialPolicyKeepsDefaults)
{
    auto p = json::parse(R"({"every_n": {"enabled": true}})").get<TriggerPolicySet>();
    EXPECT_TRUE(p.every_n.enabled);
    EXPECT_EQ(p.every_n.n, 10u);
    EXPECT_TRUE(p.party_request.enabled);
    EXPECT_FALSE(p.inactivity.enabled);
    EXPECT_THROW(json::parse(R"({"every_n": {"n": 0}})").get<TriggerPolicySet>(), Error);
}

TEST(Serialization, HeaderOmitsHistory)
{
    auto h = dispute_header_json(populated());
    EXPECT_FALSE(h.contains("messages"));
    EXPECT_EQ(h.at("participants").size(), 4u);
}
