#include "odr/config.hpp"
#include "odr/error.hpp"

#include "scenarios.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace odr;

TEST(Config, ParsesScriptedConfigWithRelativePaths)
{
    auto c = parse_config(json::parse(R"({
        "listen_address": "0.0.0.0:9090",
        "provider": {"script": "scripts/demo.json"},
        "lexicon_path": "lexicon.txt",
        "trigger_poll_interval_ms": 5000,
        "context_window_size": 12,
        "log_path": "/var/tmp/events.log",
        "fsync": false
    })"),
                          "/etc/odr");
    EXPECT_EQ(c.listen_host, "0.0.0.0");
    EXPECT_EQ(c.listen_port, 9090);
    EXPECT_EQ(c.script_path, std::filesystem::path("/etc/odr/scripts/demo.json"));
    EXPECT_EQ(c.lexicon_path, std::filesystem::path("/etc/odr/lexicon.txt"));
    EXPECT_EQ(c.log_path, std::filesystem::path("/var/tmp/events.log"));
    EXPECT_EQ(c.trigger_poll_interval, milliseconds(5000));
    EXPECT_EQ(c.context_window_size, 12u);
    EXPECT_FALSE(c.fsync);
    EXPECT_FALSE(c.remote.has_value());
}

TEST(Config, ParsesRemoteProvider)
{
    auto c = parse_config(json::parse(R"({
        "provider": {"remote": {"endpoint_url": "http://localhost:1234/v1/chat/completions",
                                "model_id": "gpt-4", "api_key_env": "MY_KEY",
                                "max_retries": 4, "request_timeout_ms": 2000}}
    })"));
    ASSERT_TRUE(c.remote.has_value());
    EXPECT_EQ(c.remote->api_key_env, "MY_KEY");
    EXPECT_EQ(c.remote->max_retries, 4u);
    EXPECT_EQ(c.remote->request_timeout, milliseconds(2000));
    EXPECT_EQ(c.remote->max_context_tokens, 8192u);
    EXPECT_EQ(c.context_window_size, 10u);
}

TEST(Config, ExactlyOneProviderMode)
{
    EXPECT_THROW(parse_config(json::parse(R"({"provider": {}})")), Error);
    EXPECT_THROW(parse_config(json::parse(R"({"provider": {"script": "a", "remote": {}}})")), Error);
    EXPECT_THROW(parse_config(json::parse(R"({})")), Error);
}

TEST(Config, RejectsSecretsAndBadValues)
{
    EXPECT_THROW(parse_config(json::parse(R"({"provider": {"remote": {"api_key": "sk-1"}}})")), Error);
    EXPECT_THROW(parse_config(json::parse(R"({"provider": {"script": "a"}, "context_window_size": 0})")), Error);
    EXPECT_THROW(parse_config(json::parse(R"({"provider": {"script": "a"}, "listen_address": "nohost"})")), Error);
    EXPECT_THROW(parse_config(json::parse(R"({"provider": {"script": "a"}, "listen_address": "h:99999"})")), Error);
    EXPECT_THROW(parse_config(json::parse(R"({"provider": {"remote": {"temperature": "hot"}}})")), Error);
}

TEST(Config, LoadsFromFile)
{
    scenarios::TempDir dir;
    {
        std::ofstream out(dir / "odr.json");
        out << R"({"provider": {"script": "s.json"}, "listen_address": "127.0.0.1:0"})";
    }
    auto c = load_config(dir / "odr.json");
    EXPECT_EQ(c.script_path, dir / "s.json");
    EXPECT_EQ(c.listen_address(), "127.0.0.1:0");
    EXPECT_THROW(load_config(dir / "missing.json"), Error);
}
