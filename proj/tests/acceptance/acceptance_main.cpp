// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails or exceeds its time budget.

#include "odr/engine.hpp"
#include "odr/error.hpp"
#include "odr/event_log.hpp"
#include "odr/prompting.hpp"
#include "odr/service.hpp"

#include "golden_prompts.hpp"
#include "lifecycle.hpp"
#include "oracle.hpp"
#include "reference_texts.hpp"
#include "scenarios.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>

using namespace odr;
using namespace std::chrono_literals;

namespace {

constexpr std::uint64_t kSeed = 20230619;

// Failure reasons accumulate here; a criterion passes when it stays empty.
struct Findings {
    std::vector<std::string> items;
    void fail(std::string what) { items.push_back(std::move(what)); }
    void expect(bool ok, const std::string& what)
    {
        if (!ok) fail(what);
    }
};

struct Criterion {
    const char* name;
    std::chrono::milliseconds budget;
    std::function<void(Findings&)> body;
};

bool run(const Criterion& c)
{
    Findings f;
    auto start = std::chrono::steady_clock::now();
    try {
        c.body(f);
    } catch (const std::exception& e) {
        f.fail(std::string("exception: ") + e.what());
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    if (elapsed > c.budget) {
        f.fail("took " + std::to_string(elapsed.count()) + " ms, budget " + std::to_string(c.budget.count()) + " ms");
    }
    std::printf("%s %s (%lld ms)\n", f.items.empty() ? "PASS" : "FAIL", c.name,
                static_cast<long long>(elapsed.count()));
    for (std::size_t i = 0; i < f.items.size() && i < 5; ++i) std::printf("    %s\n", f.items[i].c_str());
    std::fflush(stdout);
    return f.items.empty();
}

// Records every bundle; answers with a fixed text.
class Recorder final : public ChatProvider {
public:
    std::vector<PromptBundle> seen;
    CompletionResult complete(const PromptBundle& bundle, std::stop_token) override
    {
        seen.push_back(bundle);
        return {"ok"};
    }
    ProviderTag tag() const noexcept override { return ProviderTag::Scripted; }
};

struct Engine {
    std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(scenarios::epoch());
    std::shared_ptr<EventLog> log;
    std::shared_ptr<MediationEngine> engine;

    Engine(std::shared_ptr<ChatProvider> provider, std::shared_ptr<EventLog> l = std::make_shared<EventLog>())
        : log(std::move(l))
    {
        engine = std::make_shared<MediationEngine>(
            EngineOptions{}, std::move(provider),
            std::make_shared<const Lexicon>(Lexicon::load(scenarios::fixture("lexicon.txt"))), log, clock);
    }
};

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const std::filesystem::path& p, std::string_view data)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

// ---------------------------------------------------------------------------

void prompt_fidelity(Findings& f)
{
    f.expect(kReformulationPrompt == fixtures::kGoldenReformulation, "reformulation constant differs");
    f.expect(kMediatorPrompt == fixtures::kGoldenMediator, "mediator constant differs");

    auto recorder = std::make_shared<Recorder>();
    Engine e(recorder);
    auto id = scenarios::seed_dispute(*e.engine, scenarios::load_json("camera_dispute.json"), e.clock.get());
    e.engine->request_reformulation(id, ParticipantId("jane"), "You liar");
    e.engine->draft_intervention(id, ParticipantId("mia"), std::nullopt);
    e.engine->request_ai_intervention(id, ParticipantId("john"));
    if (recorder->seen.size() != 3) {
        f.fail("expected 3 provider calls, saw " + std::to_string(recorder->seen.size()));
        return;
    }
    f.expect(recorder->seen[0].system().content == fixtures::kGoldenReformulation, "reformulation system turn");
    f.expect(recorder->seen[0].turns.back().content == "You liar", "reformulation user turn");
    f.expect(recorder->seen[1].system().content == fixtures::kGoldenMediator, "draft system turn");
    f.expect(recorder->seen[2].system().content == fixtures::kGoldenMediator, "autonomous system turn");
}

void window_law(Findings& f)
{
    for (std::size_t n = 0; n <= 25; ++n) {
        auto recorder = std::make_shared<Recorder>();
        Engine e(recorder);
        auto id = e.engine->create_dispute("w", {ParticipantId("a"), "A"}, {ParticipantId("b"), "B"}, {},
                                           ParticipantInfo{ParticipantId("m"), "M"})
                      .id;
        for (std::size_t i = 1; i <= n; ++i) {
            e.clock->advance(1s);
            e.engine->submit_party_message(id, ParticipantId(i % 2 ? "a" : "b"), "turn " + std::to_string(i), true);
        }
        // With no history a draft needs an instruction.
        std::optional<std::string> instr;
        if (n == 0) instr = "open the discussion";
        e.engine->draft_intervention(id, ParticipantId("m"), instr);
        const auto& b = recorder->seen.at(0);
        auto k = std::min<std::size_t>(10, n);
        auto tag = "n=" + std::to_string(n) + ": ";
        if (b.turns.size() != k + 1) {
            f.fail(tag + "turns " + std::to_string(b.turns.size()) + ", want " + std::to_string(k + 1));
            continue;
        }
        auto snap = e.engine->snapshot(id);
        for (std::size_t i = 0; i < k; ++i) {
            const auto& m = snap->messages[n - k + i];
            auto want = std::string(m.seq % 2 ? "A" : "B") + " (party): " + m.body;
            f.expect(b.turns[i + 1].content == want, tag + "turn " + std::to_string(i) + " is " + b.turns[i + 1].content);
            f.expect(b.context_message_ids.at(i) == m.id, tag + "context id " + std::to_string(i));
        }
    }
}

void detection_oracle(Findings& f)
{
    std::mt19937_64 rng(kSeed);
    std::size_t mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        auto lex = oracle::random_lexicon(rng);
        auto msg = oracle::random_message(rng, lex);
        auto got = scan_keywords(msg, lex).matched_terms;
        auto want = oracle::brute_force_matches(msg, lex);
        if (got != want) {
            if (++mismatches <= 3) f.fail("mismatch on \"" + msg + "\"");
        }
    }
    f.expect(mismatches == 0, std::to_string(mismatches) + " mismatches of 1000");
}

void lifecycle_properties(Findings& f)
{
    auto report = lifecycle::run(10000, kSeed);
    f.expect(report.sequences == 10000, "ran " + std::to_string(report.sequences) + " sequences");
    f.expect(report.violations == 0, std::to_string(report.violations) + " violations");
    for (const auto& s : report.samples) f.fail(s);
    std::printf("    %llu operations, %llu rejected as expected\n",
                static_cast<unsigned long long>(report.operations),
                static_cast<unsigned long long>(report.rejected));
}

void trigger_semantics(Findings& f)
{
    auto make = [](TriggerPolicySet p) {
        auto e = std::make_unique<Engine>(std::make_shared<ScriptedProvider>(
            std::vector<ScriptEntry>{{std::nullopt, "Let us take a breath."}}));
        auto id = e->engine->create_dispute("t", {ParticipantId("a"), "A"}, {ParticipantId("b"), "B"}, p).id;
        return std::pair{std::move(e), id};
    };
    auto fires = [](Engine& e, const DisputeId& id, TriggerKind k) {
        for (const auto& t : e.engine->evaluate_triggers(id, e.clock->now())) {
            if (t.kind == k) return true;
        }
        return false;
    };
    auto send = [](Engine& e, const DisputeId& id, const std::string& body) {
        e.clock->advance(1s);
        auto n = e.engine->snapshot(id)->messages.size();
        e.engine->submit_party_message(id, ParticipantId(n % 2 ? "b" : "a"), body, true);
    };

    {
        TriggerPolicySet p;
        p.every_n.enabled = true;
        p.every_n.n = 10;
        auto [e, id] = make(p);
        std::size_t human = 0;
        for (int i = 0; i < 20; ++i) {
            send(*e, id, "hello");
            ++human;
            bool fired = fires(*e, id, TriggerKind::EveryN);
            f.expect(fired == (human == 10 || human == 20), "every_n(10) at count " + std::to_string(human));
            if (fired) {
                e->engine->autonomous_intervene(id, e->engine->evaluate_triggers(id, e->clock->now()).front());
                f.expect(!fires(*e, id, TriggerKind::EveryN), "every_n re-fired after intervention");
            }
        }
    }
    {
        TriggerPolicySet p;
        p.inactivity.enabled = true;
        p.inactivity.threshold = 30min;
        constexpr auto unit = 1ms;
        auto [e, id] = make(p);
        send(*e, id, "hello");
        auto last = e->clock->now();
        e->clock->set(last + p.inactivity.threshold - unit);
        f.expect(!fires(*e, id, TriggerKind::Inactivity), "inactivity fired at threshold - 1");
        e->clock->set(last + p.inactivity.threshold + unit);
        f.expect(fires(*e, id, TriggerKind::Inactivity), "inactivity silent at threshold + 1");
    }
    {
        TriggerPolicySet p;
        p.party_request.enabled = false;
        auto [e, id] = make(p);
        for (int i = 0; i < 40; ++i) {
            send(*e, id, i % 4 ? "fine" : "you liar");
            e->clock->advance(24h);
            f.expect(e->engine->evaluate_triggers(id, e->clock->now()).empty(), "disabled policy fired");
        }
        f.expect(e->engine->run_trigger_pass().empty(), "poller intervened with policies off");
        try {
            e->engine->request_ai_intervention(id, ParticipantId("a"));
            f.fail("party request accepted while disabled");
        } catch (const Error& err) {
            f.expect(err.code() == ErrorCode::PolicyDisabled, "wrong error for disabled party request");
        }
    }
}

void end_to_end_http(Findings& f)
{
    scenarios::TempDir dir;
    auto log = std::make_shared<EventLog>(dir / "events.log", EventLogOptions{false, false});
    Engine e(load_script(scenarios::fixture("scripts/reformulations.json")), log);
    ApiService service(e.engine, log);
    int port = service.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(5, 0);

    auto post = [&](const std::string& path, const json& body) -> std::pair<int, json> {
        auto res = client.Post(path, body.dump(), "application/json");
        if (!res) return {0, nullptr};
        return {res->status, json::parse(res->body)};
    };

    auto [cs, dispute] = post("/disputes", {{"title", "Neighbours"},
                                            {"party_a", {{"id", "jane"}, {"display_name", "Jane"}}},
                                            {"party_b", {{"id", "john"}, {"display_name", "John"}}}});
    f.expect(cs == 201, "create returned " + std::to_string(cs));
    auto id = dispute.at("id").get<std::string>();

    int row = 0;
    for (const auto& pair : fixtures::kReformulationPairs) {
        auto tag = "row " + std::to_string(++row) + ": ";
        const char* author = row % 2 ? "jane" : "john";
        auto [status, sug] = post("/disputes/" + id + "/messages", {{"author_id", author}, {"body", pair.original}});
        if (status != 202) {
            f.fail(tag + "submit returned " + std::to_string(status));
            continue;
        }
        f.expect(sug.at("generated_text") == pair.reformulated, tag + "suggestion text differs");
        f.expect(sug.at("original_text") == pair.original, tag + "original not retained");
        auto [rs, msg] = post("/suggestions/" + sug.at("id").get<std::string>() + "/resolve",
                              {{"actor_id", author}, {"action", "SendReformulated"}});
        f.expect(rs == 201, tag + "accept returned " + std::to_string(rs));
        f.expect(msg.value("origin", "") == "HumanAcceptedReformulation", tag + "origin " + msg.value("origin", ""));
        f.expect(msg.value("body", "") == pair.reformulated, tag + "sent body differs");
    }
    service.stop();

    auto live = e.engine->snapshot(DisputeId(id));
    f.expect(live->messages.size() == 3, "expected 3 messages");
    f.expect(log->replay(DisputeId(id)) == *live, "in-memory replay differs from live state");
    f.expect(replay_file(log->path().value(), DisputeId(id)) == *live, "file replay differs from live state");
}

void tables_two_three(Findings& f)
{
    auto camera = scenarios::load_json("camera_dispute.json");
    auto rows = scenarios::load_json("camera_drafts.json");
    for (std::size_t i = 0; i < fixtures::kCameraDrafts.size(); ++i) {
        auto tag = "draft row " + std::to_string(i + 1) + ": ";
        const auto& want = fixtures::kCameraDrafts[i];
        Engine e(load_script(scenarios::fixture(rows.at(i).at("script").get<std::string>())));
        auto id = scenarios::seed_dispute(*e.engine, camera, e.clock.get());
        std::optional<std::string> instr;
        if (!want.instructions.empty()) instr = std::string(want.instructions);
        auto draft = e.engine->draft_intervention(id, ParticipantId("mia"), instr);
        f.expect(draft.generated_text == want.intervention, tag + "text differs");
        f.expect(draft.kind == SuggestionKind::MediatorDraft, tag + "kind");
        f.expect(draft.pending(), tag + "not pending");
        f.expect(draft.instructions == instr, tag + "instructions not recorded");
        f.expect(draft.context_snapshot && draft.context_snapshot->size() == 4, tag + "context snapshot");
        auto msg = e.engine->resolve_suggestion(draft.id, ParticipantId("mia"), Resolution::send_reformulated());
        f.expect(msg.origin == Origin::MediatorDraftSent, tag + "origin");
        f.expect(msg.author == ParticipantId("mia") && msg.author_role == Role::Mediator, tag + "author");
        f.expect(!msg.ai_generated(), tag + "sent draft marked AI");
    }

    auto disputes = scenarios::load_json("intervention_disputes.json");
    Engine e(load_script(scenarios::fixture("scripts/interventions.json")));
    for (std::size_t i = 0; i < fixtures::kGeneratedInterventions.size(); ++i) {
        auto tag = "intervention row " + std::to_string(i + 1) + ": ";
        auto id = scenarios::seed_dispute(*e.engine, disputes.at(i), e.clock.get());
        TriggerEvent trigger{TriggerKind::PartyRequest, id, e.clock->now(), "acceptance"};
        auto msg = e.engine->autonomous_intervene(id, trigger);
        f.expect(msg.body == fixtures::kGeneratedInterventions[i], tag + "text differs");
        f.expect(msg.origin == Origin::AiAutonomous && msg.ai_generated(), tag + "origin");
        f.expect(msg.author == kAiMediatorId && msg.author_role == Role::AiMediator, tag + "author");
        auto snap = e.engine->snapshot(id);
        f.expect(snap->triggers.size() == 1 && snap->triggers[0].kind == TriggerKind::PartyRequest,
                 tag + "trigger not recorded");
        f.expect(snap->messages.back() == msg, tag + "not appended last");
    }
}

// Drives a mix of operations across three disputes until the log holds at
// least `target` events.
void populate(MediationEngine& engine, ManualClock& clock, const EventLog& log, std::uint64_t target)
{
    auto camera = scenarios::seed_dispute(engine, scenarios::load_json("camera_dispute.json"), &clock);
    auto other = scenarios::load_json("intervention_disputes.json");
    std::vector<DisputeId> ids{camera, scenarios::seed_dispute(engine, other.at(0), &clock),
                               scenarios::seed_dispute(engine, other.at(1), &clock)};
    engine.attach_mediator(ids[1], {ParticipantId("mia"), "Mia"});
    std::mt19937_64 rng(kSeed);
    for (std::uint64_t step = 0; log.last_seq() < target; ++step) {
        clock.advance(1min);
        const auto& id = ids[step % ids.size()];
        auto snap = engine.snapshot(id);
        const auto& a = snap->participants[0].id;
        const auto& b = snap->participants[1].id;
        switch (rng() % 6) {
        case 0: {
            const auto& row = fixtures::kReformulationPairs[rng() % 3];
            auto out = engine.submit_party_message(id, a, std::string(row.original), false);
            if (!out.sent()) {
                auto r = rng() % 3;
                engine.resolve_suggestion(out.suggestion().id, a,
                                          r == 0   ? Resolution::send_original()
                                          : r == 1 ? Resolution::send_reformulated()
                                                   : Resolution::send_edited("Let us talk calmly."));
            }
            break;
        }
        case 1: engine.submit_party_message(id, b, "I see your point.", true); break;
        case 2: engine.request_reformulation(id, b, "You liar"); break;
        case 3: engine.request_ai_intervention(id, a); break;
        case 4:
            if (snap->holder(Role::Mediator)) {
                auto mediator = snap->holder(Role::Mediator)->id;
                auto d = engine.draft_intervention(id, mediator, std::nullopt);
                if (rng() % 2) engine.resolve_suggestion(d.id, mediator, Resolution::send_reformulated());
            }
            break;
        default: engine.submit_party_message(id, a, "Noted.", true); break;
        }
    }
}

void persistence(Findings& f)
{
    constexpr std::uint64_t kEvents = 200;
    scenarios::TempDir dir;
    auto path = dir / "events.log";
    auto log = std::make_shared<EventLog>(path, EventLogOptions{false, false});
    Engine e(load_script(scenarios::fixture("scripts/demo.json")), log);
    populate(*e.engine, *e.clock, *log, kEvents);

    // Field-for-field equality of the full replay.
    for (const auto& id : e.engine->dispute_ids()) {
        auto live = e.engine->snapshot(id);
        f.expect(replay_file(path, id) == *live, "full replay of " + id.str() + " differs from live state");
        f.expect(EventLog(path).replay(id) == *live, "reopened log replay of " + id.str() + " differs");
    }

    // Record boundaries of the first kEvents records.
    auto full = read_file(path);
    std::vector<std::size_t> boundaries{0};
    for (std::size_t pos = 0; boundaries.size() <= kEvents;) {
        pos = full.find('\n', pos);
        if (pos == std::string::npos) break;
        boundaries.push_back(++pos);
    }
    if (boundaries.size() != kEvents + 1) {
        f.fail("log has fewer than " + std::to_string(kEvents) + " records");
        return;
    }
    auto records = log->all();
    auto cut = dir / "cut.log";
    for (std::size_t k = 0; k <= kEvents; ++k) {
        auto tag = "prefix " + std::to_string(k) + ": ";
        write_file(cut, std::string_view(full).substr(0, boundaries[k]));
        EventLog prefix(cut, EventLogOptions{false, false});
        if (prefix.last_seq() != k) {
            f.fail(tag + "last_seq " + std::to_string(prefix.last_seq()));
            continue;
        }
        std::span<const EventRecord> head(records.data(), k);
        for (const auto& id : prefix.disputes()) {
            f.expect(prefix.replay(id) == fold_events(head, id), tag + "replay of " + id.str());
        }
        // A torn write inside the next record recovers to this boundary.
        if (k < kEvents) {
            auto torn = boundaries[k] + (boundaries[k + 1] - boundaries[k]) / 2;
            write_file(cut, std::string_view(full).substr(0, torn));
            EventLog recovered(cut, EventLogOptions{false, true});
            f.expect(recovered.last_seq() == k, tag + "torn tail not cut back");
            f.expect(std::filesystem::file_size(cut) == boundaries[k], tag + "file not truncated to boundary");
        }
    }
}

} // namespace

int main()
{
    spdlog::set_level(spdlog::level::err);
    const std::vector<Criterion> criteria{
        {"prompt fidelity", 1000ms, prompt_fidelity},
        {"context window law", 1000ms, window_law},
        {"detection oracle", 10000ms, detection_oracle},
        {"lifecycle properties", 60000ms, lifecycle_properties},
        {"trigger semantics", 5000ms, trigger_semantics},
        {"end-to-end reformulation over HTTP", 5000ms, end_to_end_http},
        {"mediator drafts and autonomous interventions", 5000ms, tables_two_three},
        {"persistence crash safety", 60000ms, persistence},
    };
    int failed = 0;
    for (const auto& c : criteria) failed += run(c) ? 0 : 1;
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
