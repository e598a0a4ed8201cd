#pragma once

#include "odr/provider.hpp"
#include "odr/serialization.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace odr {

/// Process configuration, loaded from a JSON file:
///
///   {
///     "listen_address": "127.0.0.1:8080",
///     "provider": { "remote": { "endpoint_url": ..., "model_id": ..., ... } }
///              or { "script": "fixtures/scripts/reformulations.json" },
///     "lexicon_path": "fixtures/lexicon.txt",
///     "trigger_poll_interval_ms": 30000,
///     "context_window_size": 10,
///     "log_path": "odr-events.log",
///     "llm_classifier": false,
///     "fsync": true,
///     "subscriber_queue_limit": 1024
///   }
///
/// Relative paths resolve against the config file's directory.
struct ServiceConfig {
    std::string listen_host = "127.0.0.1";
    int listen_port = 8080;
    std::optional<ProviderConfig> remote;
    std::optional<std::filesystem::path> script_path;
    std::optional<std::filesystem::path> lexicon_path;
    milliseconds trigger_poll_interval{std::chrono::seconds(30)};
    std::size_t context_window_size = 10;
    std::optional<std::filesystem::path> log_path;
    bool llm_classifier = false;
    bool fsync = true;
    std::size_t subscriber_queue_limit = 1024;

    /// Throws ConfigError unless exactly one provider mode is active and
    /// the numeric settings are in range.
    void validate() const;

    void set_listen_address(std::string_view address);
    std::string listen_address() const;
};

ServiceConfig parse_config(const json& j, const std::filesystem::path& base_dir = {});
ServiceConfig load_config(const std::filesystem::path& path);

ProviderConfig parse_provider_config(const json& j);
/// Never includes the secret itself, only the variable name.
json to_json_redacted(const ProviderConfig& config);

} // namespace odr
