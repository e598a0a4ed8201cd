#pragma once

#include "odr/config.hpp"
#include "odr/engine.hpp"
#include "odr/error.hpp"
#include "odr/event_hub.hpp"

#include <atomic>
#include <memory>
#include <stop_token>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace odr {

/// HTTP/JSON surface over a MediationEngine, plus the server-sent-event
/// stream and the background trigger poller.
///
///   POST /disputes                          create (201)
///   GET  /disputes/{id}                     snapshot
///   POST /disputes/{id}/messages            201 sent | 202 suggestion offered
///   POST /disputes/{id}/reformulate         201 suggestion
///   POST /disputes/{id}/draft               201 mediator draft
///   POST /disputes/{id}/ai-intervene        201 AI message
///   POST /disputes/{id}/mediator            201 participant
///   POST /disputes/{id}/status              200 snapshot
///   GET  /disputes/{id}/events?since=N      polling
///   GET  /disputes/{id}/stream?since=N      text/event-stream
///   GET  /suggestions/{id}
///   POST /suggestions/{id}/resolve          201 message
///
/// Errors are {"code", "message"} with a status derived from the code.
class ApiService {
public:
    ApiService(std::shared_ptr<MediationEngine> engine, std::shared_ptr<EventLog> log,
               std::size_t subscriber_queue_limit = 1024);
    ~ApiService();

    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    /// Returns the bound port (useful with port 0).
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    void serve();
    /// bind + serve on a background thread; returns the port.
    int start(const std::string& host, int port);
    void stop();

    void start_trigger_poller(milliseconds interval);

    EventHub& hub() noexcept { return *hub_; }
    MediationEngine& engine() noexcept { return *engine_; }

private:
    void routes();

    std::shared_ptr<MediationEngine> engine_;
    std::shared_ptr<EventLog> log_;
    std::shared_ptr<EventHub> hub_;
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
    std::jthread poller_;
    std::atomic<bool> stopping_{false};
};

int http_status_for(ErrorCode code) noexcept;

/// Everything a running server needs, wired from a ServiceConfig.
struct Runtime {
    std::shared_ptr<EventLog> log;
    std::shared_ptr<ChatProvider> provider;
    std::shared_ptr<MediationEngine> engine;
    std::unique_ptr<ApiService> service;
};

Runtime build_runtime(const ServiceConfig& config,
                      std::shared_ptr<const Clock> clock = std::make_shared<SystemClock>());

} // namespace odr
