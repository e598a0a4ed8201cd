#include "odr/error.hpp"
#include "odr/service.hpp"

#include "reference_texts.hpp"
#include "scenarios.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

using namespace odr;

namespace {

class Unavailable final : public ChatProvider {
public:
    CompletionResult complete(const PromptBundle&, std::stop_token) override
    {
        throw Error(ErrorCode::RateLimited, "slow down", 429);
    }
    ProviderTag tag() const noexcept override { return ProviderTag::Remote; }
};

struct Server {
    std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(scenarios::epoch());
    std::shared_ptr<EventLog> log = std::make_shared<EventLog>();
    std::shared_ptr<MediationEngine> engine;
    std::unique_ptr<ApiService> service;
    std::unique_ptr<httplib::Client> client;

    explicit Server(std::shared_ptr<ChatProvider> provider = nullptr, std::size_t queue_limit = 1024)
    {
        if (!provider) provider = load_script(scenarios::fixture("scripts/demo.json"));
        engine = std::make_shared<MediationEngine>(
            EngineOptions{}, provider,
            std::make_shared<const Lexicon>(Lexicon::load(scenarios::fixture("lexicon.txt"))), log, clock);
        service = std::make_unique<ApiService>(engine, log, queue_limit);
        int port = service->start("127.0.0.1", 0);
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_read_timeout(5, 0);
    }
    ~Server() { service->stop(); }

    std::pair<int, json> post(const std::string& path, const json& body)
    {
        auto res = client->Post(path, body.dump(), "application/json");
        if (!res) return {0, nullptr};
        return {res->status, res->body.empty() ? json() : json::parse(res->body)};
    }
    std::pair<int, json> get(const std::string& path)
    {
        auto res = client->Get(path);
        if (!res) return {0, nullptr};
        return {res->status, json::parse(res->body)};
    }
    std::string create(const json& extra = json::object())
    {
        json body{{"title", "Broken camera"},
                  {"party_a", {{"id", "jane"}, {"display_name", "Jane"}}},
                  {"party_b", {{"id", "john"}, {"display_name", "John"}}},
                  {"mediator", {{"id", "mia"}, {"display_name", "Mia"}}}};
        body.update(extra);
        auto [status, d] = post("/disputes", body);
        EXPECT_EQ(status, 201);
        return d.at("id").get<std::string>();
    }
};

/// Reads SSE frames until `count` events arrived (or the stream ends).
std::vector<json> read_stream(httplib::Client& client, const std::string& path, std::size_t count,
                              std::vector<std::string>* raw_events = nullptr)
{
    std::vector<json> out;
    std::string buf;
    client.Get(path, [&](const char* data, std::size_t len) {
        buf.append(data, len);
        for (auto end = buf.find("\n\n"); end != std::string::npos; end = buf.find("\n\n")) {
            auto frame = buf.substr(0, end);
            buf.erase(0, end + 2);
            if (frame.rfind("event:", 0) == 0) {
                if (raw_events) raw_events->push_back(frame);
                continue;
            }
            auto d = frame.find("data: ");
            if (d != std::string::npos) out.push_back(json::parse(frame.substr(d + 6)));
        }
        return out.size() < count;
    });
    return out;
}

} // namespace

TEST(Service, CreateAndFetchDispute)
{
    Server s;
    auto id = s.create();
    auto [status, d] = s.get("/disputes/" + id);
    EXPECT_EQ(status, 200);
    EXPECT_EQ(d.at("title"), "Broken camera");
    EXPECT_EQ(d.at("participants").size(), 4u);
    EXPECT_EQ(d.at("status"), "Open");
    auto [missing, err] = s.get("/disputes/d-404");
    EXPECT_EQ(missing, 404);
    EXPECT_EQ(err.at("code"), "UnknownDispute");
}

TEST(Service, FlaggedMessageReturns202WithReformulation)
{
    Server s;
    auto id = s.create();
    const auto& row = fixtures::kReformulationPairs[0];
    auto [status, sug] = s.post("/disputes/" + id + "/messages", {{"author_id", "jane"}, {"body", row.original}});
    ASSERT_EQ(status, 202);
    EXPECT_EQ(sug.at("generated_text"), row.reformulated);
    EXPECT_EQ(sug.at("status"), "Pending");

    auto [rs, msg] = s.post("/suggestions/" + sug.at("id").get<std::string>() + "/resolve",
                            {{"actor_id", "jane"}, {"action", "SendReformulated"}});
    EXPECT_EQ(rs, 201);
    EXPECT_EQ(msg.at("origin"), "HumanAcceptedReformulation");
    EXPECT_EQ(msg.at("body"), row.reformulated);

    auto [again, err] = s.post("/suggestions/" + sug.at("id").get<std::string>() + "/resolve",
                               {{"actor_id", "jane"}, {"action", "SendReformulated"}});
    EXPECT_EQ(again, 409);
    EXPECT_EQ(err.at("code"), "AlreadyResolved");
}

TEST(Service, ValidationAndRoleErrors)
{
    Server s;
    auto id = s.create();
    EXPECT_EQ(s.post("/disputes/" + id + "/messages", {{"author_id", "jane"}, {"body", ""}}).first, 400);
    EXPECT_EQ(s.post("/disputes/" + id + "/messages", {{"author_id", "jane"}}).first, 400);
    EXPECT_EQ(s.post("/disputes/" + id + "/messages", {{"author_id", "ai-mediator"}, {"body", "x"}}).first, 403);
    EXPECT_EQ(s.post("/disputes/" + id + "/messages", {{"author_id", "nobody"}, {"body", "x"}}).first, 403);
    EXPECT_EQ(s.post("/disputes/" + id + "/draft", {{"mediator_id", "john"}}).first, 403);
    auto res = s.client->Post("/disputes/" + id + "/messages", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(s.post("/suggestions/s-1/resolve", {{"actor_id", "jane"}, {"action", "Shout"}}).first, 400);
}

TEST(Service, MediatorMessagesAndDrafts)
{
    Server s;
    auto id = s.create();
    auto [st, m] = s.post("/disputes/" + id + "/messages", {{"author_id", "mia"}, {"body", "Welcome both."}});
    EXPECT_EQ(st, 201);
    EXPECT_EQ(m.at("origin"), "MediatorFreeform");
    auto [ds, draft] = s.post("/disputes/" + id + "/draft", {{"mediator_id", "mia"}, {"instructions", nullptr}});
    EXPECT_EQ(ds, 201);
    EXPECT_EQ(draft.at("kind"), "MediatorDraft");
    auto [gs, fetched] = s.get("/suggestions/" + draft.at("id").get<std::string>());
    EXPECT_EQ(gs, 200);
    EXPECT_EQ(fetched, draft);
}

TEST(Service, AiInterventionAndPolicyGuard)
{
    Server s;
    auto id = s.create();
    s.post("/disputes/" + id + "/messages", {{"author_id", "john"}, {"body", "Hello."}});
    auto [st, m] = s.post("/disputes/" + id + "/ai-intervene", {{"requester_id", "john"}});
    EXPECT_EQ(st, 201);
    EXPECT_EQ(m.at("ai_generated"), true);
    EXPECT_EQ(m.at("origin"), "AiAutonomous");

    auto off = s.create({{"policy", {{"party_request", {{"enabled", false}}}}}});
    auto [denied, err] = s.post("/disputes/" + off + "/ai-intervene", {{"requester_id", "john"}});
    EXPECT_EQ(denied, 403);
    EXPECT_EQ(err.at("code"), "PolicyDisabled");
}

TEST(Service, ClosedDisputeIs409)
{
    Server s;
    auto id = s.create();
    auto [st, d] = s.post("/disputes/" + id + "/status", {{"actor_id", "jane"}, {"status", "Settled"}});
    EXPECT_EQ(st, 200);
    EXPECT_EQ(d.at("status"), "Settled");
    EXPECT_EQ(s.post("/disputes/" + id + "/messages", {{"author_id", "jane"}, {"body", "hi"}}).first, 409);
}

TEST(Service, ProviderFailureIs502WithRetryHint)
{
    Server s(std::make_shared<Unavailable>());
    auto id = s.create();
    auto res = s.client->Post("/disputes/" + id + "/messages",
                              json{{"author_id", "jane"}, {"body", "You liar"}}.dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 502);
    EXPECT_EQ(res->get_header_value("Retry-After"), "5");
    auto body = json::parse(res->body);
    EXPECT_EQ(body.at("code"), "ReformulationUnavailable");
    EXPECT_EQ(body.at("retry_after_s"), 5);
    // The client can still send with force_send.
    EXPECT_EQ(s.post("/disputes/" + id + "/messages",
                     {{"author_id", "jane"}, {"body", "You liar"}, {"force_send", true}})
                  .first,
              201);
}

TEST(Service, PollingEventsMatchLog)
{
    Server s;
    auto id = s.create();
    auto other = s.create();
    for (int i = 0; i < 3; ++i) {
        s.post("/disputes/" + id + "/messages", {{"author_id", "jane"}, {"body", "m" + std::to_string(i)}});
        s.post("/disputes/" + other + "/messages", {{"author_id", "john"}, {"body", "x"}});
    }
    auto [st, events] = s.get("/disputes/" + id + "/events?since=0");
    EXPECT_EQ(st, 200);
    auto expected = s.log->events_for(DisputeId(id), 0);
    ASSERT_EQ(events.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_EQ(events[i].at("event_seq"), expected[i].event_seq);
        EXPECT_EQ(events[i].at("kind"), to_string(expected[i].kind));
        EXPECT_EQ(events[i].at("payload"), expected[i].payload);
    }
    auto since = expected[1].event_seq;
    EXPECT_EQ(s.get("/disputes/" + id + "/events?since=" + std::to_string(since)).second.size(),
              expected.size() - 2);
    EXPECT_EQ(s.get("/disputes/" + id + "/events?since=abc").first, 400);
}

TEST(Service, StreamDeliversAndResumes)
{
    Server s;
    auto id = s.create();
    for (int i = 0; i < 5; ++i) {
        s.post("/disputes/" + id + "/messages", {{"author_id", "jane"}, {"body", "m" + std::to_string(i)}});
    }
    // Backlog: created + 5 messages.
    auto first = read_stream(*s.client, "/disputes/" + id + "/stream?since=0", 6);
    ASSERT_EQ(first.size(), 6u);
    EXPECT_EQ(first[0].at("kind"), "DisputeCreated");
    auto cursor = first[4].at("event_seq").get<std::uint64_t>();

    std::thread later([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        httplib::Client c2("127.0.0.1", s.client->port());
        c2.Post("/disputes/" + id + "/messages", json{{"author_id", "john"}, {"body", "live"}}.dump(),
                "application/json");
    });
    httplib::Client c3("127.0.0.1", s.client->port());
    c3.set_read_timeout(5, 0);
    auto resumed = read_stream(c3, "/disputes/" + id + "/stream?since=" + std::to_string(cursor), 2);
    later.join();
    ASSERT_EQ(resumed.size(), 2u);
    EXPECT_EQ(resumed[0], first[5]);
    EXPECT_EQ(resumed[1].at("payload").at("body"), "live");
    EXPECT_EQ(resumed[1].at("event_seq"), cursor + 2);

    EXPECT_EQ(s.get("/disputes/d-404/stream").first, 404);
}

TEST(Service, StreamOverflowSendsResumeHint)
{
    Server s(nullptr, 2);
    auto id = s.create();
    std::vector<std::string> raw;
    std::thread writer([&] {
        while (s.service->hub().subscriber_count(DisputeId(id)) == 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
        for (int i = 0; i < 50; ++i) {
            s.engine->submit_party_message(DisputeId(id), ParticipantId("jane"), "m", true);
        }
    });
    httplib::Client c("127.0.0.1", s.client->port());
    c.set_read_timeout(5, 0);
    // Read slowly so the queue overflows; the server ends the stream.
    auto got = read_stream(c, "/disputes/" + id + "/stream?since=1", 1000, &raw);
    writer.join();
    ASSERT_FALSE(raw.empty());
    EXPECT_EQ(raw.back().rfind("event: overflow", 0), 0u);
    auto hint = json::parse(raw.back().substr(raw.back().find("data: ") + 6));
    std::uint64_t expected_cursor = got.empty() ? 1 : got.back().at("event_seq").get<std::uint64_t>();
    EXPECT_EQ(hint.at("resume_since"), expected_cursor);
}

TEST(Service, StatusMapping)
{
    EXPECT_EQ(http_status_for(ErrorCode::EmptyDraft), 400);
    EXPECT_EQ(http_status_for(ErrorCode::NotRequester), 403);
    EXPECT_EQ(http_status_for(ErrorCode::UnknownSuggestion), 404);
    EXPECT_EQ(http_status_for(ErrorCode::DisputeClosed), 409);
    EXPECT_EQ(http_status_for(ErrorCode::Timeout), 502);
    EXPECT_EQ(http_status_for(ErrorCode::StorageFull), 500);
}

TEST(Service, RuntimeFromConfig)
{
    scenarios::TempDir dir;
    ServiceConfig config;
    config.script_path = scenarios::fixture("scripts/demo.json");
    config.lexicon_path = scenarios::fixture("lexicon.txt");
    config.log_path = dir / "events.log";
    config.fsync = false;
    std::string id;
    {
        auto rt = build_runtime(config);
        id = rt.engine->create_dispute("t", {ParticipantId("a"), "A"}, {ParticipantId("b"), "B"}).id.str();
        const auto& row = fixtures::kReformulationPairs[2];
        auto out = rt.engine->submit_party_message(DisputeId(id), ParticipantId("a"), std::string(row.original), false);
        ASSERT_FALSE(out.sent());
        EXPECT_EQ(out.suggestion().generated_text, row.reformulated);
    }
    auto rt = build_runtime(config);
    EXPECT_EQ(rt.engine->snapshot(DisputeId(id))->suggestions.size(), 1u);
}
