#include "odr/config.hpp"
#include "odr/error.hpp"
#include "odr/service.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <pthread.h>

#include <atomic>
#include <csignal>
#include <iostream>
#include <thread>

int main(int argc, char** argv)
{
    CLI::App app{"Dispute resolution chat server with LLM-assisted mediation"};
    std::string config_path;
    std::string script_path;
    std::string listen;
    std::string log_path;
    std::string lexicon_path;
    app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--scripted", script_path, "Scripted provider file (overrides the configured provider)")
        ->check(CLI::ExistingFile);
    app.add_option("--listen", listen, "host:port to listen on");
    app.add_option("--log", log_path, "Event log path (overrides log_path)");
    app.add_option("--lexicon", lexicon_path, "Keyword lexicon (overrides lexicon_path)")
        ->check(CLI::ExistingFile);
    CLI11_PARSE(app, argc, argv);

    // Signals are taken synchronously by a watcher thread, so every thread
    // spawned below inherits the blocked mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    try {
        odr::ServiceConfig config;
        if (!config_path.empty()) {
            config = odr::load_config(config_path);
        }
        if (!script_path.empty()) {
            config.remote.reset();
            config.script_path = script_path;
        }
        if (!listen.empty()) config.set_listen_address(listen);
        if (!log_path.empty()) config.log_path = log_path;
        if (!lexicon_path.empty()) config.lexicon_path = lexicon_path;
        config.validate();

        auto rt = odr::build_runtime(config);
        int port = rt.service->bind(config.listen_host, config.listen_port);
        rt.service->start_trigger_poller(config.trigger_poll_interval);
        spdlog::info("listening on {}:{} ({} provider)", config.listen_host, port,
                     config.remote ? "remote" : "scripted");

        std::atomic<bool> finished{false};
        std::thread watcher([&] {
            int sig = 0;
            sigwait(&signals, &sig);
            if (!finished) spdlog::info("shutting down");
            rt.service->stop();
        });
        rt.service->serve();
        finished = true;
        pthread_kill(watcher.native_handle(), SIGTERM);
        watcher.join();
    } catch (const odr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
