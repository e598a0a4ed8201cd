#pragma once

#include "odr/prompting.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

namespace odr {

enum class ProviderTag { Remote, Scripted };

struct CompletionResult {
    std::string text; // trimmed, never empty
    milliseconds latency{0};
    ProviderTag provider = ProviderTag::Scripted;
};

/// Chat-completion backend. Implementations must be safe for concurrent
/// complete() calls.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;

    virtual CompletionResult complete(const PromptBundle& bundle, std::stop_token stop = {}) = 0;
    virtual ProviderTag tag() const noexcept = 0;
};

// ---------------------------------------------------------------------------
// Scripted provider

struct ScriptEntry {
    std::optional<std::string> match; // nullopt: default response
    std::string response;
};

/// Deterministic provider: looks up the content of the bundle's final user
/// turn (exact bytes) and answers with the scripted response, falling back
/// to the default entry. A miss without default is ProviderRejected.
class ScriptedProvider final : public ChatProvider {
public:
    explicit ScriptedProvider(std::vector<ScriptEntry> entries);

    /// JSON array of {"match": text|null, "response": text}. Throws
    /// ScriptParseError with the offending line in detail().
    static std::unique_ptr<ScriptedProvider> parse(std::string_view text);
    static std::unique_ptr<ScriptedProvider> load(const std::filesystem::path& path);

    CompletionResult complete(const PromptBundle& bundle, std::stop_token stop = {}) override;
    ProviderTag tag() const noexcept override { return ProviderTag::Scripted; }

    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::vector<ScriptEntry> entries_;
    std::optional<std::string> fallback_;
};

/// Same as ScriptedProvider::load.
inline std::unique_ptr<ScriptedProvider> load_script(const std::filesystem::path& path)
{
    return ScriptedProvider::load(path);
}

// ---------------------------------------------------------------------------
// Remote provider

struct ProviderConfig {
    std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
    std::string model_id = "gpt-4";
    std::string api_key_env = "LLM_API_KEY";
    std::uint32_t max_context_tokens = 8192;
    std::uint32_t max_completion_tokens = 1024;
    double temperature = 0.7;
    milliseconds request_timeout{std::chrono::seconds(30)};
    std::uint32_t max_retries = 2;
    milliseconds initial_backoff{std::chrono::seconds(1)};

    void validate() const;
};

struct HttpRequest {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    milliseconds timeout{0};
};

struct HttpResponse {
    enum class Failure { None, Timeout, Connection };

    Failure failure = Failure::None;
    int status = 0;
    std::string body;
};

/// Seam between the provider's retry logic and the network.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport (http and https URLs).
class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post(const HttpRequest& request) override;
};

/// Waits for the given duration; returns false if stop was requested.
using Sleeper = std::function<bool(milliseconds, std::stop_token)>;

bool interruptible_sleep(milliseconds duration, std::stop_token stop);

/// Speaks the chat-completion JSON contract. The API key is read from the
/// configured environment variable at call time and only ever placed in
/// the Authorization header.
class RemoteProvider final : public ChatProvider {
public:
    explicit RemoteProvider(ProviderConfig config,
                            std::shared_ptr<HttpTransport> transport = std::make_shared<HttplibTransport>(),
                            Sleeper sleeper = interruptible_sleep);

    CompletionResult complete(const PromptBundle& bundle, std::stop_token stop = {}) override;
    ProviderTag tag() const noexcept override { return ProviderTag::Remote; }

    const ProviderConfig& config() const noexcept { return config_; }

    /// Request body for a bundle; exposed for wire-format tests.
    std::string request_body(const PromptBundle& bundle) const;

private:
    ProviderConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleeper_;
};

} // namespace odr
