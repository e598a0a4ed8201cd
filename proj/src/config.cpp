#include "odr/config.hpp"

#include "odr/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace odr {

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::ConfigError, std::string("invalid value for \"") + key + "\"");
    }
}

std::uint32_t get_u32(const json& j, const char* key, std::uint32_t fallback)
{
    auto v = get_or<std::int64_t>(j, key, fallback);
    if (v < 0 || v > static_cast<std::int64_t>(UINT32_MAX)) {
        throw Error(ErrorCode::ConfigError, std::string("\"") + key + "\" is out of range");
    }
    return static_cast<std::uint32_t>(v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

} // namespace

ProviderConfig parse_provider_config(const json& j)
{
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "remote provider must be an object");
    if (j.contains("api_key")) {
        throw Error(ErrorCode::ConfigError,
                    "secrets are not read from config files; set api_key_env instead");
    }
    ProviderConfig c;
    c.endpoint_url = get_or(j, "endpoint_url", c.endpoint_url);
    c.model_id = get_or(j, "model_id", c.model_id);
    c.api_key_env = get_or(j, "api_key_env", c.api_key_env);
    c.max_context_tokens = get_u32(j, "max_context_tokens", c.max_context_tokens);
    c.max_completion_tokens = get_u32(j, "max_completion_tokens", c.max_completion_tokens);
    c.temperature = get_or(j, "temperature", c.temperature);
    c.request_timeout = milliseconds(get_or<std::int64_t>(j, "request_timeout_ms",
                                                          c.request_timeout.count()));
    c.max_retries = get_u32(j, "max_retries", c.max_retries);
    c.initial_backoff = milliseconds(get_or<std::int64_t>(j, "initial_backoff_ms",
                                                          c.initial_backoff.count()));
    c.validate();
    return c;
}

json to_json_redacted(const ProviderConfig& c)
{
    return {{"endpoint_url", c.endpoint_url},
            {"model_id", c.model_id},
            {"api_key_env", c.api_key_env},
            {"max_context_tokens", c.max_context_tokens},
            {"max_completion_tokens", c.max_completion_tokens},
            {"temperature", c.temperature},
            {"request_timeout_ms", c.request_timeout.count()},
            {"max_retries", c.max_retries},
            {"initial_backoff_ms", c.initial_backoff.count()}};
}

void ServiceConfig::validate() const
{
    if (remote.has_value() == script_path.has_value()) {
        throw Error(ErrorCode::ConfigError,
                    "exactly one of provider.remote and provider.script must be set");
    }
    if (remote) remote->validate();
    if (listen_port < 0 || listen_port > 65535) {
        throw Error(ErrorCode::ConfigError, "listen port out of range");
    }
    if (context_window_size == 0) {
        throw Error(ErrorCode::ConfigError, "context_window_size must be positive");
    }
    if (trigger_poll_interval <= milliseconds::zero()) {
        throw Error(ErrorCode::ConfigError, "trigger_poll_interval_ms must be positive");
    }
    if (subscriber_queue_limit == 0) {
        throw Error(ErrorCode::ConfigError, "subscriber_queue_limit must be positive");
    }
}

void ServiceConfig::set_listen_address(std::string_view address)
{
    auto colon = address.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw Error(ErrorCode::ConfigError, "listen address must be host:port");
    }
    auto port_text = address.substr(colon + 1);
    int port = -1;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 ||
        port > 65535) {
        throw Error(ErrorCode::ConfigError, "invalid listen port: " + std::string(port_text));
    }
    listen_host = std::string(address.substr(0, colon));
    listen_port = port;
}

std::string ServiceConfig::listen_address() const
{
    return listen_host + ":" + std::to_string(listen_port);
}

ServiceConfig parse_config(const json& j, const std::filesystem::path& base_dir)
{
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    ServiceConfig c;
    if (auto it = j.find("listen_address"); it != j.end()) {
        if (!it->is_string()) throw Error(ErrorCode::ConfigError, "listen_address must be a string");
        c.set_listen_address(it->get<std::string>());
    }
    auto provider = j.find("provider");
    if (provider == j.end() || !provider->is_object()) {
        throw Error(ErrorCode::ConfigError, "provider section is required");
    }
    if (auto r = provider->find("remote"); r != provider->end() && !r->is_null()) {
        c.remote = parse_provider_config(*r);
    }
    if (auto s = provider->find("script"); s != provider->end() && !s->is_null()) {
        if (!s->is_string()) throw Error(ErrorCode::ConfigError, "provider.script must be a path");
        c.script_path = resolve(base_dir, s->get<std::string>());
    }
    if (auto lex = get_or<std::string>(j, "lexicon_path", ""); !lex.empty()) {
        c.lexicon_path = resolve(base_dir, lex);
    }
    if (auto log = get_or<std::string>(j, "log_path", ""); !log.empty()) {
        c.log_path = resolve(base_dir, log);
    }
    c.trigger_poll_interval = milliseconds(
        get_or<std::int64_t>(j, "trigger_poll_interval_ms", c.trigger_poll_interval.count()));
    auto window = get_or<std::int64_t>(j, "context_window_size",
                                       static_cast<std::int64_t>(c.context_window_size));
    if (window < 1) throw Error(ErrorCode::ConfigError, "context_window_size must be positive");
    c.context_window_size = static_cast<std::size_t>(window);
    c.llm_classifier = get_or(j, "llm_classifier", c.llm_classifier);
    c.fsync = get_or(j, "fsync", c.fsync);
    auto limit = get_or<std::int64_t>(j, "subscriber_queue_limit",
                                      static_cast<std::int64_t>(c.subscriber_queue_limit));
    if (limit < 1) throw Error(ErrorCode::ConfigError, "subscriber_queue_limit must be positive");
    c.subscriber_queue_limit = static_cast<std::size_t>(limit);
    c.validate();
    return c;
}

ServiceConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, "config " + path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

} // namespace odr
