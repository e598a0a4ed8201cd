#include "odr/provider.hpp"

#include "odr/error.hpp"
#include "odr/serialization.hpp"
#include "odr/text.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

namespace odr {

namespace {

std::int64_t line_of(std::string_view text, std::size_t offset)
{
    offset = std::min(offset, text.size());
    return 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n');
}

// Byte offsets where each element of the top-level array starts, so
// structural errors can name a line.
std::vector<std::size_t> element_offsets(std::string_view text)
{
    std::vector<std::size_t> out;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    bool expect_element = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
        if (depth == 1 && expect_element) {
            out.push_back(i);
            expect_element = false;
        }
        switch (c) {
        case '"': in_string = true; break;
        case '[':
        case '{':
            ++depth;
            if (depth == 1 && c == '[') expect_element = true;
            break;
        case ']':
        case '}': --depth; break;
        case ',':
            if (depth == 1) expect_element = true;
            break;
        default: break;
        }
    }
    return out;
}

[[noreturn]] void script_error(const std::string& what, std::int64_t line)
{
    throw Error(ErrorCode::ScriptParseError, "script line " + std::to_string(line) + ": " + what,
                line);
}

} // namespace

// ---------------------------------------------------------------------------

ScriptedProvider::ScriptedProvider(std::vector<ScriptEntry> entries)
{
    for (auto& e : entries) {
        if (!e.match) {
            fallback_ = e.response;
        } else {
            entries_.push_back(std::move(e));
        }
    }
}

std::unique_ptr<ScriptedProvider> ScriptedProvider::parse(std::string_view content)
{
    json doc;
    try {
        doc = json::parse(content);
    } catch (const json::parse_error& e) {
        script_error(e.what(), line_of(content, e.byte > 0 ? e.byte - 1 : 0));
    }
    if (!doc.is_array()) {
        script_error("script must be a JSON array", 1);
    }

    auto offsets = element_offsets(content);
    auto line_for = [&](std::size_t i) {
        return i < offsets.size() ? line_of(content, offsets[i]) : 1;
    };

    std::vector<ScriptEntry> entries;
    std::set<std::string> seen;
    bool have_default = false;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        if (!item.is_object()) {
            script_error("entry is not an object", line_for(i));
        }
        auto match = item.find("match");
        auto response = item.find("response");
        if (match == item.end() || !(match->is_null() || match->is_string())) {
            script_error("\"match\" must be a string or null", line_for(i));
        }
        if (response == item.end() || !response->is_string()) {
            script_error("\"response\" must be a string", line_for(i));
        }
        ScriptEntry e;
        e.response = response->get<std::string>();
        if (text::is_blank(e.response)) {
            script_error("\"response\" must not be empty", line_for(i));
        }
        if (match->is_null()) {
            if (have_default) script_error("more than one default entry", line_for(i));
            have_default = true;
        } else {
            e.match = match->get<std::string>();
            if (!seen.insert(*e.match).second) {
                script_error("duplicate match", line_for(i));
            }
        }
        entries.push_back(std::move(e));
    }
    return std::make_unique<ScriptedProvider>(std::move(entries));
}

std::unique_ptr<ScriptedProvider> ScriptedProvider::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::ScriptParseError, "cannot open script " + path.string(), 0);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

CompletionResult ScriptedProvider::complete(const PromptBundle& bundle, std::stop_token stop)
{
    if (stop.stop_requested()) {
        throw Error(ErrorCode::Cancelled, "completion cancelled");
    }
    const std::string* key = bundle.last_user_content();
    const std::string* answer = nullptr;
    if (key != nullptr) {
        for (const auto& e : entries_) {
            if (*e.match == *key) {
                answer = &e.response;
                break;
            }
        }
    }
    if (answer == nullptr && fallback_) {
        answer = &*fallback_;
    }
    if (answer == nullptr) {
        throw Error(ErrorCode::ProviderRejected, "scripted provider has no response for this prompt",
                    404);
    }
    auto out = text::trim(*answer);
    if (out.empty()) {
        throw Error(ErrorCode::EmptyCompletion, "scripted response is empty");
    }
    return {std::move(out), milliseconds(0), ProviderTag::Scripted};
}

// ---------------------------------------------------------------------------

void ProviderConfig::validate() const
{
    if (endpoint_url.empty()) throw Error(ErrorCode::ConfigError, "endpoint_url is required");
    if (model_id.empty()) throw Error(ErrorCode::ConfigError, "model_id is required");
    if (api_key_env.empty()) throw Error(ErrorCode::ConfigError, "api_key_env is required");
    if (max_context_tokens == 0 || max_completion_tokens == 0) {
        throw Error(ErrorCode::ConfigError, "token limits must be positive");
    }
    if (max_completion_tokens >= max_context_tokens) {
        throw Error(ErrorCode::ConfigError, "max_completion_tokens must be < max_context_tokens");
    }
    if (!(temperature >= 0.0)) throw Error(ErrorCode::ConfigError, "temperature must be >= 0");
    if (request_timeout <= milliseconds::zero()) {
        throw Error(ErrorCode::ConfigError, "request_timeout must be positive");
    }
}

namespace {

struct ParsedUrl {
    std::string scheme_host_port;
    std::string path;
};

ParsedUrl split_url(const std::string& url)
{
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::ConfigError, "endpoint_url must include a scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

HttpResponse HttplibTransport::post(const HttpRequest& request)
{
    auto url = split_url(request.url);
    httplib::Client client(url.scheme_host_port);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) {
        if (k == "Content-Type") continue;
        headers.emplace(k, v);
    }
    auto res = client.Post(url.path, headers, request.body, "application/json");
    HttpResponse out;
    if (!res) {
        out.failure = res.error() == httplib::Error::Read || res.error() == httplib::Error::Write ||
                              res.error() == httplib::Error::ConnectionTimeout
                          ? HttpResponse::Failure::Timeout
                          : HttpResponse::Failure::Connection;
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

bool interruptible_sleep(milliseconds duration, std::stop_token stop)
{
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    cv.wait_for(lock, stop, duration, [] { return false; });
    return !stop.stop_requested();
}

RemoteProvider::RemoteProvider(ProviderConfig config, std::shared_ptr<HttpTransport> transport,
                               Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper))
{
    config_.validate();
}

std::string RemoteProvider::request_body(const PromptBundle& bundle) const
{
    json messages = json::array();
    for (const auto& t : bundle.turns) {
        messages.push_back({{"role", to_string(t.role)}, {"content", t.content}});
    }
    json body{{"model", config_.model_id},
              {"messages", std::move(messages)},
              {"temperature", config_.temperature},
              {"max_tokens", config_.max_completion_tokens}};
    return body.dump();
}

CompletionResult RemoteProvider::complete(const PromptBundle& bundle, std::stop_token stop)
{
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw Error(ErrorCode::MissingApiKey,
                    "environment variable " + config_.api_key_env + " is not set");
    }
    bundle.validate();

    HttpRequest request;
    request.url = config_.endpoint_url;
    request.headers = {{"Authorization", std::string("Bearer ") + key},
                       {"Content-Type", "application/json"}};
    request.body = request_body(bundle);
    request.timeout = config_.request_timeout;

    const auto started = std::chrono::steady_clock::now();
    auto backoff = config_.initial_backoff;
    const std::uint32_t attempts = 1 + config_.max_retries;
    ErrorCode last_code = ErrorCode::Timeout;
    std::string last_message;
    std::optional<std::int64_t> last_status;

    for (std::uint32_t attempt = 1; attempt <= attempts; ++attempt) {
        if (stop.stop_requested()) {
            throw Error(ErrorCode::Cancelled, "completion cancelled");
        }
        auto response = transport_->post(request);

        if (response.failure == HttpResponse::Failure::None && response.status >= 200 &&
            response.status < 300) {
            std::string text;
            try {
                auto doc = json::parse(response.body);
                text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception&) {
                throw Error(ErrorCode::ProviderRejected, "malformed completion response",
                            response.status);
            }
            text = text::trim(text);
            if (text.empty()) {
                throw Error(ErrorCode::EmptyCompletion, "provider returned an empty completion");
            }
            auto latency = std::chrono::duration_cast<milliseconds>(
                std::chrono::steady_clock::now() - started);
            return {std::move(text), latency, ProviderTag::Remote};
        }

        bool transient = false;
        if (response.failure != HttpResponse::Failure::None) {
            transient = true;
            last_code = ErrorCode::Timeout;
            last_status.reset();
            last_message = response.failure == HttpResponse::Failure::Timeout
                               ? "request timed out"
                               : "connection failed";
        } else if (response.status == 429) {
            transient = true;
            last_code = ErrorCode::RateLimited;
            last_status = 429;
            last_message = "rate limited";
        } else {
            transient = response.status >= 500;
            last_code = ErrorCode::ProviderRejected;
            last_status = response.status;
            auto excerpt = response.body.substr(0, 200);
            // Some gateways echo request headers back in error bodies.
            constexpr std::string_view redacted = "[redacted]";
            for (auto pos = excerpt.find(key); pos != std::string::npos;
                 pos = excerpt.find(key, pos + redacted.size())) {
                excerpt.replace(pos, std::strlen(key), redacted);
            }
            last_message = "provider returned status " + std::to_string(response.status) + ": " + excerpt;
        }

        spdlog::warn("completion attempt {}/{} failed: {}", attempt, attempts,
                     last_status ? "status " + std::to_string(*last_status) : last_message);
        if (!transient) {
            break;
        }
        if (attempt < attempts) {
            if (!sleeper_(backoff, stop)) {
                throw Error(ErrorCode::Cancelled, "completion cancelled during backoff");
            }
            backoff *= 2;
        }
    }
    throw Error(last_code, last_message, last_status);
}

} // namespace odr
