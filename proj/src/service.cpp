#include "odr/service.hpp"

#include "odr/error.hpp"
#include "odr/serialization.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>

namespace odr {

int http_status_for(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DuplicateParticipant:
    case ErrorCode::EmptyDraft:
    case ErrorCode::EmptyEdit:
    case ErrorCode::EmptyContext:
    case ErrorCode::InvalidOrigin:
    case ErrorCode::InvalidAction:
    case ErrorCode::SerializationError:
    case ErrorCode::SystemPromptTooLarge:
        return 400;
    case ErrorCode::NotAParticipant:
    case ErrorCode::NotAParty:
    case ErrorCode::NotMediator:
    case ErrorCode::NotRequester:
    case ErrorCode::PolicyDisabled:
        return 403;
    case ErrorCode::UnknownDispute:
    case ErrorCode::UnknownSuggestion:
        return 404;
    case ErrorCode::DisputeClosed:
    case ErrorCode::AlreadyResolved:
        return 409;
    case ErrorCode::MissingApiKey:
    case ErrorCode::Timeout:
    case ErrorCode::RateLimited:
    case ErrorCode::ProviderRejected:
    case ErrorCode::EmptyCompletion:
    case ErrorCode::Cancelled:
    case ErrorCode::UnparseableAnswer:
    case ErrorCode::ReformulationUnavailable:
        return 502;
    case ErrorCode::ScriptParseError:
    case ErrorCode::LexiconParseError:
    case ErrorCode::ConfigError:
    case ErrorCode::StorageFull:
    case ErrorCode::StorageError:
    case ErrorCode::CorruptLog:
        return 500;
    }
    return 500;
}

namespace {

constexpr int kRetryAfterSeconds = 5;
constexpr milliseconds kStreamHeartbeat{1000};

json event_json(const EventRecord& r)
{
    return {{"event_seq", r.event_seq},
            {"dispute_id", r.dispute_id},
            {"kind", to_string(r.kind)},
            {"recorded_at", format_timestamp(r.recorded_at)},
            {"payload", r.payload}};
}

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e)
{
    int status = http_status_for(e.code());
    if (status == 502) {
        res.set_header("Retry-After", std::to_string(kRetryAfterSeconds));
    }
    json body{{"code", to_string(e.code())}, {"message", e.what()}};
    if (status == 502) body["retry_after_s"] = kRetryAfterSeconds;
    send_json(res, status, body);
}

json parse_body(const httplib::Request& req)
{
    if (req.body.empty()) return json::object();
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
    }
}

std::string required_string(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw Error(ErrorCode::InvalidArgument, std::string("\"") + key + "\" must be a string");
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
        throw Error(ErrorCode::InvalidArgument, std::string("\"") + key + "\" must be a string");
    }
    return it->get<std::string>();
}

ParticipantInfo participant_info(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || !it->is_object()) {
        throw Error(ErrorCode::InvalidArgument, std::string("\"") + key + "\" must be an object");
    }
    return {ParticipantId(required_string(*it, "id")), required_string(*it, "display_name")};
}

std::uint64_t since_param(const httplib::Request& req)
{
    if (!req.has_param("since")) return 0;
    auto text = req.get_param_value("since");
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::InvalidArgument, "since must be a non-negative integer");
    }
    return v;
}

template <class Fn>
httplib::Server::Handler guarded(Fn fn)
{
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            if (http_status_for(e.code()) >= 500) {
                spdlog::warn("{} {} failed: {}", req.method, req.path, e.what());
            }
            send_error(res, e);
        } catch (const json::exception& e) {
            send_error(res, Error(ErrorCode::InvalidArgument, e.what()));
        }
    };
}

} // namespace

ApiService::ApiService(std::shared_ptr<MediationEngine> engine, std::shared_ptr<EventLog> log,
                       std::size_t subscriber_queue_limit)
    : engine_(std::move(engine)),
      log_(std::move(log)),
      hub_(std::make_shared<EventHub>(log_, subscriber_queue_limit)),
      server_(std::make_unique<httplib::Server>())
{
    engine_->set_event_listener([hub = hub_](const EventRecord& r) { hub->publish(r); });
    // Streams hold a worker each, so size the pool well above the default.
    server_->new_task_queue = [] { return new httplib::ThreadPool(32); };
    routes();
}

ApiService::~ApiService()
{
    stop();
    engine_->set_event_listener({});
}

void ApiService::routes()
{
    auto& s = *server_;
    auto& engine = *engine_;

    s.Post("/disputes", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto j = parse_body(req);
        TriggerPolicySet policy;
        if (auto it = j.find("policy"); it != j.end() && !it->is_null()) {
            policy = it->get<TriggerPolicySet>();
        }
        std::optional<ParticipantInfo> mediator;
        if (auto it = j.find("mediator"); it != j.end() && !it->is_null()) {
            mediator = participant_info(j, "mediator");
        }
        auto d = engine.create_dispute(required_string(j, "title"), participant_info(j, "party_a"),
                                       participant_info(j, "party_b"), policy, mediator);
        send_json(res, 201, json(d));
    }));

    s.Get(R"(/disputes/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, json(*engine.snapshot(DisputeId(req.matches[1].str()))));
    }));

    s.Post(R"(/disputes/([^/]+)/messages)",
           guarded([&](const httplib::Request& req, httplib::Response& res) {
               DisputeId id(req.matches[1].str());
               auto j = parse_body(req);
               ParticipantId author(required_string(j, "author_id"));
               auto body = required_string(j, "body");
               auto snap = engine.snapshot(id);
               const Participant* p = snap->find_participant(author);
               if (p != nullptr && p->role == Role::Mediator) {
                   send_json(res, 201, json(engine.post_mediator_message(id, author, std::move(body))));
                   return;
               }
               auto outcome = engine.submit_party_message(id, author, std::move(body),
                                                          j.value("force_send", false));
               if (outcome.sent()) {
                   send_json(res, 201, json(outcome.message()));
               } else {
                   send_json(res, 202, json(outcome.suggestion()));
               }
           }));

    s.Post(R"(/disputes/([^/]+)/reformulate)",
           guarded([&](const httplib::Request& req, httplib::Response& res) {
               auto j = parse_body(req);
               auto sug = engine.request_reformulation(DisputeId(req.matches[1].str()),
                                                       ParticipantId(required_string(j, "author_id")),
                                                       required_string(j, "body"));
               send_json(res, 201, json(sug));
           }));

    s.Post(R"(/disputes/([^/]+)/draft)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto j = parse_body(req);
        auto sug = engine.draft_intervention(DisputeId(req.matches[1].str()),
                                             ParticipantId(required_string(j, "mediator_id")),
                                             optional_string(j, "instructions"));
        send_json(res, 201, json(sug));
    }));

    s.Post(R"(/disputes/([^/]+)/ai-intervene)",
           guarded([&](const httplib::Request& req, httplib::Response& res) {
               auto j = parse_body(req);
               auto m = engine.request_ai_intervention(
                   DisputeId(req.matches[1].str()), ParticipantId(required_string(j, "requester_id")));
               send_json(res, 201, json(m));
           }));

    s.Post(R"(/disputes/([^/]+)/mediator)",
           guarded([&](const httplib::Request& req, httplib::Response& res) {
               auto j = parse_body(req);
               ParticipantInfo info{ParticipantId(required_string(j, "id")),
                                    required_string(j, "display_name")};
               send_json(res, 201, json(engine.attach_mediator(DisputeId(req.matches[1].str()), info)));
           }));

    s.Post(R"(/disputes/([^/]+)/status)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        DisputeId id(req.matches[1].str());
        auto j = parse_body(req);
        auto status = j.at("status").get<DisputeStatus>();
        engine.change_status(id, ParticipantId(required_string(j, "actor_id")), status);
        send_json(res, 200, json(*engine.snapshot(id)));
    }));

    s.Get(R"(/disputes/([^/]+)/events)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto since = since_param(req);
        json out = json::array();
        for (const auto& r : engine.events_since(DisputeId(req.matches[1].str()), since)) {
            out.push_back(event_json(r));
        }
        send_json(res, 200, out);
    }));

    s.Get(R"(/disputes/([^/]+)/stream)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        DisputeId id(req.matches[1].str());
        auto since = since_param(req);
        engine.snapshot(id); // UnknownDispute
        auto sub = hub_->subscribe(id, since);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [sub](std::size_t, httplib::DataSink& sink) {
                if (!sink.is_writable()) return false;
                auto rec = sub->next(kStreamHeartbeat);
                if (rec) {
                    std::string frame = "id: " + std::to_string(rec->event_seq) +
                                        "\ndata: " + event_json(*rec).dump() + "\n\n";
                    return sink.write(frame.data(), frame.size());
                }
                switch (sub->state()) {
                case EventHub::Subscription::State::Open: {
                    static constexpr std::string_view ping = ": ping\n\n";
                    return sink.write(ping.data(), ping.size());
                }
                case EventHub::Subscription::State::Overflowed: {
                    std::string frame = "event: overflow\ndata: " +
                                        json{{"resume_since", sub->cursor()}}.dump() + "\n\n";
                    sink.write(frame.data(), frame.size());
                    sink.done();
                    return true;
                }
                case EventHub::Subscription::State::Closed:
                    sink.done();
                    return true;
                }
                return false;
            },
            [sub](bool) { sub->close(); });
    }));

    s.Get(R"(/suggestions/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, json(engine.suggestion(SuggestionId(req.matches[1].str()))));
    }));

    s.Post(R"(/suggestions/([^/]+)/resolve)",
           guarded([&](const httplib::Request& req, httplib::Response& res) {
               auto j = parse_body(req);
               Resolution r;
               r.action = resolution_action_from_string(required_string(j, "action"));
               if (r.action == Resolution::Action::SendEdited) {
                   r.edited_text = optional_string(j, "edited_text").value_or("");
               }
               auto m = engine.resolve_suggestion(SuggestionId(req.matches[1].str()),
                                                  ParticipantId(required_string(j, "actor_id")), r);
               send_json(res, 201, json(m));
           }));

    s.set_exception_handler([](const httplib::Request& req, httplib::Response& res,
                               std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        spdlog::error("{} {}: {}", req.method, req.path, what);
        send_json(res, 500, {{"code", "Internal"}, {"message", what}});
    });
}

int ApiService::bind(const std::string& host, int port)
{
    int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
        throw Error(ErrorCode::ConfigError, "cannot listen on " + host + ":" + std::to_string(port));
    }
    return bound;
}

void ApiService::serve()
{
    server_->listen_after_bind();
}

int ApiService::start(const std::string& host, int port)
{
    int bound = bind(host, port);
    server_thread_ = std::thread([this] { serve(); });
    server_->wait_until_ready();
    return bound;
}

void ApiService::stop()
{
    if (stopping_.exchange(true)) return;
    poller_.request_stop();
    if (poller_.joinable()) poller_.join();
    hub_->close_all();
    server_->stop();
    if (server_thread_.joinable()) server_thread_.join();
}

void ApiService::start_trigger_poller(milliseconds interval)
{
    poller_ = std::jthread([this, interval](std::stop_token stop) {
        while (interruptible_sleep(interval, stop)) {
            try {
                engine_->run_trigger_pass();
            } catch (const std::exception& e) {
                spdlog::error("trigger pass failed: {}", e.what());
            }
        }
    });
}

Runtime build_runtime(const ServiceConfig& config, std::shared_ptr<const Clock> clock)
{
    config.validate();
    Runtime rt;
    if (config.log_path) {
        EventLogOptions opts;
        opts.fsync = config.fsync;
        rt.log = std::make_shared<EventLog>(*config.log_path, opts);
    } else {
        rt.log = std::make_shared<EventLog>();
    }

    EngineOptions options;
    options.context_window = config.context_window_size;
    options.llm_classifier = config.llm_classifier;
    if (config.remote) {
        options.max_context_tokens = config.remote->max_context_tokens;
        options.max_completion_tokens = config.remote->max_completion_tokens;
        rt.provider = std::make_shared<RemoteProvider>(*config.remote);
    } else {
        rt.provider = std::shared_ptr<ChatProvider>(ScriptedProvider::load(*config.script_path));
    }

    auto lexicon = config.lexicon_path ? std::make_shared<const Lexicon>(Lexicon::load(*config.lexicon_path))
                                       : std::make_shared<const Lexicon>();
    rt.engine = std::make_shared<MediationEngine>(options, rt.provider, lexicon, rt.log,
                                                  std::move(clock));
    rt.service = std::make_unique<ApiService>(rt.engine, rt.log, config.subscriber_queue_limit);
    return rt;
}

} // namespace odr
