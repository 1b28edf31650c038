#include <catch2/catch_amalgamated.hpp>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "handover/region_grounding.hpp"
#include "handover/vlm_client.hpp"
#include "test_support.hpp"

using namespace handover;

namespace {

std::vector<ChatMessage> sample_messages() { return build_prompt("mug", 5); }

std::vector<std::uint8_t> sample_image() { return {0x89, 'P', 'N', 'G', 1, 2, 3, 4}; }

}  // namespace

TEST_CASE("mock client returns canned replies without network", "[vlm_client]") {
  MockVlmClient mock({"human:[1], robot:[2]"});
  CHECK(mock.complete(sample_messages(), sample_image()) == "human:[1], robot:[2]");
  CHECK(mock.complete(sample_messages(), sample_image()) == "human:[1], robot:[2]");
  CHECK(mock.calls() == 2);

  MockVlmClient scripted({"first", "second"});
  CHECK(scripted.complete(sample_messages(), sample_image()) == "first");
  CHECK(scripted.complete(sample_messages(), sample_image()) == "second");
  CHECK(scripted.complete(sample_messages(), sample_image()) == "second");
}

TEST_CASE("request hash is deterministic and input-sensitive", "[vlm_client]") {
  auto h1 = request_hash(sample_messages(), sample_image());
  auto h2 = request_hash(sample_messages(), sample_image());
  CHECK(h1 == h2);
  CHECK(h1.size() == 16);

  auto other_image = sample_image();
  other_image.push_back(0xff);
  CHECK(request_hash(sample_messages(), other_image) != h1);
  CHECK(request_hash(build_prompt("cup", 5), sample_image()) != h1);
}

TEST_CASE("record then replay round trips through the cache", "[vlm_client]") {
  test_support::TempDir tmp("cache");
  TranscriptCache cache(tmp.path());

  RecordingVlmClient recorder(std::make_unique<MockVlmClient>(
                                  std::vector<std::string>{"human:[7], robot:[3]"}),
                              cache);
  std::string live_reply = recorder.complete(sample_messages(), sample_image());

  ReplayVlmClient replay(cache);
  CHECK(replay.complete(sample_messages(), sample_image()) == live_reply);
}

TEST_CASE("replay on a cold cache is a CacheMiss naming the hash", "[vlm_client]") {
  test_support::TempDir tmp("coldcache");
  ReplayVlmClient replay{TranscriptCache(tmp.path())};
  try {
    replay.complete(sample_messages(), sample_image());
    FAIL("expected CacheMiss");
  } catch (const error& e) {
    CHECK(e.code() == errc::cache_miss);
    CHECK(std::string(e.what()).find(request_hash(sample_messages(), sample_image())) !=
          std::string::npos);
  }
}

TEST_CASE("cache with two entries serves two distinct calls", "[vlm_client]") {
  test_support::TempDir tmp("twocache");
  TranscriptCache cache(tmp.path());
  auto msgs_a = build_prompt("mug", 5);
  auto msgs_b = build_prompt("hammer", 5);

  RecordingVlmClient recorder(
      std::make_unique<MockVlmClient>(std::vector<std::string>{"reply-a", "reply-b"}), cache);
  recorder.complete(msgs_a, sample_image());
  recorder.complete(msgs_b, sample_image());

  ReplayVlmClient replay(cache);
  CHECK(replay.complete(msgs_b, sample_image()) == "reply-b");
  CHECK(replay.complete(msgs_a, sample_image()) == "reply-a");
}

TEST_CASE("wire request matches the documented schema", "[vlm_client]") {
  VlmConfig config;
  config.model = "test-model";
  config.temperature = 0.0;
  nlohmann::json body = build_wire_request(sample_messages(), sample_image(), config);

  CHECK(body["model"] == "test-model");
  CHECK(body["temperature"] == 0.0);
  REQUIRE(body["messages"].is_array());
  REQUIRE(body["messages"].size() == 2);
  const auto& second = body["messages"][1];
  CHECK(second["role"] == "user");
  REQUIRE(second["content"].is_array());
  REQUIRE(second["content"].size() == 2);
  CHECK(second["content"][0]["type"] == "text");
  CHECK(second["content"][1]["type"] == "image_url");
  std::string url = second["content"][1]["image_url"]["url"].get<std::string>();
  CHECK(url.rfind("data:image/png;base64,", 0) == 0);
  // first message carries no image
  CHECK(body["messages"][0]["content"].size() == 1);
}

TEST_CASE("response parsing handles string and part-list content", "[vlm_client]") {
  CHECK(parse_wire_response(
            R"({"choices":[{"message":{"content":"human:[1], robot:[2]"}}]})") ==
        "human:[1], robot:[2]");
  CHECK(parse_wire_response(
            R"({"choices":[{"message":{"content":[{"type":"text","text":"ab"},{"type":"text","text":"cd"}]}}]})") ==
        "abcd");
  CHECK_THROWS_AS(parse_wire_response("not json"), error);
  CHECK_THROWS_AS(parse_wire_response(R"({"choices":[]})"), error);
  CHECK_THROWS_AS(parse_wire_response(R"({"choices":[{"message":{}}]})"), error);
}

TEST_CASE("missing API key environment variable fails before any request", "[vlm_client]") {
  VlmConfig config;
  config.base_url = "http://127.0.0.1:1";
  config.api_key_env = "HANDOVER_TEST_KEY_UNSET";
  ::unsetenv("HANDOVER_TEST_KEY_UNSET");
  LiveVlmClient client(config);
  try {
    client.complete(sample_messages(), sample_image());
    FAIL("expected Transport error");
  } catch (const error& e) {
    CHECK(e.code() == errc::transport);
    CHECK(std::string(e.what()).find("HANDOVER_TEST_KEY_UNSET") != std::string::npos);
  }
}

TEST_CASE("live client retries 429 with backoff then succeeds", "[vlm_client]") {
  std::atomic<int> hits{0};
  nlohmann::json seen_body;
  std::string seen_auth;

  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    int n = ++hits;
    if (n <= 2) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
      return;
    }
    seen_body = nlohmann::json::parse(req.body);
    seen_auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"content":"human:[7], robot:[3]"}}]})",
                    "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  VlmConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  config.api_key_env = "HANDOVER_TEST_KEY";
  config.max_retries = 2;
  config.backoff_base_s = 0.01;
  ::setenv("HANDOVER_TEST_KEY", "sekrit", 1);

  LiveVlmClient client(config);
  std::string reply = client.complete(sample_messages(), sample_image());
  CHECK(reply == "human:[7], robot:[3]");
  CHECK(hits.load() == 3);  // 429, 429, 200
  CHECK(seen_auth == "Bearer sekrit");
  CHECK(seen_body.contains("messages"));
  CHECK(seen_body["messages"][1]["content"][1]["image_url"]["url"]
            .get<std::string>()
            .rfind("data:image/png;base64,", 0) == 0);

  server.stop();
  server_thread.join();
}

TEST_CASE("live client gives up after max_retries", "[vlm_client]") {
  std::atomic<int> hits{0};
  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  VlmConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  config.api_key_env = "HANDOVER_TEST_KEY";
  config.max_retries = 1;
  config.backoff_base_s = 0.01;
  ::setenv("HANDOVER_TEST_KEY", "sekrit", 1);

  LiveVlmClient client(config);
  try {
    client.complete(sample_messages(), sample_image());
    FAIL("expected Transport error");
  } catch (const error& e) {
    CHECK(e.code() == errc::transport);
  }
  CHECK(hits.load() == 2);  // initial attempt + one retry

  server.stop();
  server_thread.join();
}

TEST_CASE("non-retryable statuses fail immediately", "[vlm_client]") {
  std::atomic<int> hits{0};
  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  VlmConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  config.api_key_env = "HANDOVER_TEST_KEY";
  config.max_retries = 3;
  config.backoff_base_s = 0.01;
  ::setenv("HANDOVER_TEST_KEY", "sekrit", 1);

  LiveVlmClient client(config);
  CHECK_THROWS_AS(client.complete(sample_messages(), sample_image()), error);
  CHECK(hits.load() == 1);

  server.stop();
  server_thread.join();
}
