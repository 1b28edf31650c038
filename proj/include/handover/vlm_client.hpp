#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "handover/chat.hpp"
#include "handover/error.hpp"
#include "handover/rng.hpp"
#include "handover/scene_io.hpp"

namespace handover {

struct VlmConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4-vision-preview";
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 2;
  double temperature = 0.0;     // deterministic grounding by default
  double backoff_base_s = 1.0;  // doubles per retry

  void validate() const {
    require(timeout_s > 0.0, errc::invalid_argument, "vlm timeout must be positive");
    require(max_retries >= 0, errc::invalid_argument, "vlm max_retries must be >= 0");
  }
};

inline VlmConfig vlm_config_from_json(const nlohmann::json& j) {
  VlmConfig c;
  if (j.contains("base_url")) c.base_url = j["base_url"].get<std::string>();
  if (j.contains("model")) c.model = j["model"].get<std::string>();
  if (j.contains("api_key_env")) c.api_key_env = j["api_key_env"].get<std::string>();
  if (j.contains("timeout_s")) c.timeout_s = j["timeout_s"].get<double>();
  if (j.contains("max_retries")) c.max_retries = j["max_retries"].get<int>();
  if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
  if (j.contains("backoff_base_s")) c.backoff_base_s = j["backoff_base_s"].get<double>();
  c.validate();
  return c;
}

inline nlohmann::json vlm_config_to_json(const VlmConfig& c) {
  return {{"base_url", c.base_url},     {"model", c.model},
          {"api_key_env", c.api_key_env}, {"timeout_s", c.timeout_s},
          {"max_retries", c.max_retries}, {"temperature", c.temperature},
          {"backoff_base_s", c.backoff_base_s}};
}

namespace vlm_detail {

inline std::string base64_encode(const std::vector<std::uint8_t>& data) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= data.size()) {
    std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += alphabet[v & 63];
    i += 3;
  }
  if (i + 1 == data.size()) {
    std::uint32_t v = data[i] << 16;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == data.size()) {
    std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

}  // namespace vlm_detail

// Deterministic content digest of a request: canonical message JSON plus the
// raw image bytes. Used as the transcript cache key.
inline std::string request_hash(const std::vector<ChatMessage>& messages,
                                const std::vector<std::uint8_t>& image_png) {
  std::string ser = messages_to_json(messages).dump();
  std::uint64_t h = fnv1a64(ser);
  h = fnv1a64(image_png.data(), image_png.size(), h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// OpenAI-compatible chat-completions request body. The image travels as a
// base64 data URL inside the content of the message that carries it.
inline nlohmann::json build_wire_request(const std::vector<ChatMessage>& messages,
                                         const std::vector<std::uint8_t>& image_png,
                                         const VlmConfig& config) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", m.text}});
    if (m.attach_image)
      content.push_back(
          {{"type", "image_url"},
           {"image_url",
            {{"url", "data:image/png;base64," + vlm_detail::base64_encode(image_png)}}}});
    msgs.push_back({{"role", m.role}, {"content", content}});
  }
  return {{"model", config.model}, {"temperature", config.temperature}, {"messages", msgs}};
}

inline std::string parse_wire_response(const std::string& body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  require(!j.is_discarded(), errc::transport, "response body is not valid JSON");
  require(j.contains("choices") && j["choices"].is_array() && !j["choices"].empty(),
          errc::transport, "response has no choices");
  const nlohmann::json& msg = j["choices"][0].contains("message")
                                  ? j["choices"][0]["message"]
                                  : nlohmann::json();
  require(msg.is_object() && msg.contains("content"), errc::transport,
          "response choice has no message content");
  const nlohmann::json& content = msg["content"];
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {  // some servers return content parts
    std::string out;
    for (const auto& part : content)
      if (part.is_object() && part.value("type", "") == "text")
        out += part.value("text", "");
    return out;
  }
  fail(errc::transport, "unsupported message content type in response");
}

class VlmClient {
 public:
  virtual ~VlmClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages,
                               const std::vector<std::uint8_t>& image_png) = 0;
};

// Scripted client: returns canned replies in order, repeating the last one.
class MockVlmClient : public VlmClient {
 public:
  explicit MockVlmClient(std::vector<std::string> replies) : replies_(std::move(replies)) {
    require(!replies_.empty(), errc::invalid_argument, "mock needs at least one reply");
  }

  std::string complete(const std::vector<ChatMessage>& messages,
                       const std::vector<std::uint8_t>& image_png) override {
    require(!messages.empty(), errc::invalid_argument, "messages must be non-empty");
    (void)image_png;
    ++calls_;
    if (replies_.size() > 1) {
      std::string r = replies_.front();
      replies_.erase(replies_.begin());
      return r;
    }
    return replies_.front();
  }

  int calls() const { return calls_; }

 private:
  std::vector<std::string> replies_;
  int calls_ = 0;
};

class LiveVlmClient : public VlmClient {
 public:
  explicit LiveVlmClient(VlmConfig config) : config_(std::move(config)) { config_.validate(); }

  std::string complete(const std::vector<ChatMessage>& messages,
                       const std::vector<std::uint8_t>& image_png) override {
    require(!messages.empty(), errc::invalid_argument, "messages must be non-empty");
    const char* key = std::getenv(config_.api_key_env.c_str());
    require(key != nullptr && *key != '\0', errc::transport,
            "API key environment variable '" + config_.api_key_env + "' is not set");

    auto [origin, prefix] = split_base_url(config_.base_url);
    std::string body = build_wire_request(messages, image_png, config_).dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        double delay = config_.backoff_base_s * std::pow(2.0, attempt - 1);
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      httplib::Client cli(origin);
      cli.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
      cli.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
      httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
      auto res = cli.Post(prefix + "/chat/completions", headers, body, "application/json");
      if (!res) {
        last_error = "transport failure: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) return parse_wire_response(res->body);
      last_error = "status " + std::to_string(res->status);
      bool retryable = res->status == 429 || res->status >= 500;
      if (!retryable) fail(errc::transport, "request failed with " + last_error);
    }
    fail(errc::transport, "request failed after " + std::to_string(config_.max_retries + 1) +
                              " attempts (" + last_error + ")");
  }

 private:
  static std::pair<std::string, std::string> split_base_url(const std::string& url) {
    auto scheme_end = url.find("://");
    require(scheme_end != std::string::npos, errc::invalid_argument,
            "base_url must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
  }

  VlmConfig config_;
};

// One JSON file per request hash.
class TranscriptCache {
 public:
  explicit TranscriptCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void store(const std::string& hash, const std::string& response_text) const {
    std::filesystem::create_directories(dir_);
    nlohmann::json j = {{"request_hash", hash},
                        {"response_text", response_text},
                        {"timestamp", now_iso8601()}};
    std::string s = j.dump(2);
    s.push_back('\n');
    io_detail::write_file_bytes(dir_ / (hash + ".json"),
                                std::vector<std::uint8_t>(s.begin(), s.end()));
  }

  std::string load(const std::string& hash) const {
    auto path = dir_ / (hash + ".json");
    require(std::filesystem::exists(path), errc::cache_miss,
            "no transcript for request_hash " + hash + " in " + dir_.string());
    nlohmann::json j = io_detail::parse_json_file(path);
    require(j.is_object() && j.contains("response_text") && j["response_text"].is_string(),
            errc::format, path.string() + ": transcript missing 'response_text'");
    return j["response_text"].get<std::string>();
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  static std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  std::filesystem::path dir_;
};

// Record mode: forward to the inner client and store every transcript.
class RecordingVlmClient : public VlmClient {
 public:
  RecordingVlmClient(std::unique_ptr<VlmClient> inner, TranscriptCache cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  std::string complete(const std::vector<ChatMessage>& messages,
                       const std::vector<std::uint8_t>& image_png) override {
    std::string reply = inner_->complete(messages, image_png);
    cache_.store(request_hash(messages, image_png), reply);
    return reply;
  }

 private:
  std::unique_ptr<VlmClient> inner_;
  TranscriptCache cache_;
};

// Replay mode: fully offline; a miss is an error, never a network call.
class ReplayVlmClient : public VlmClient {
 public:
  explicit ReplayVlmClient(TranscriptCache cache) : cache_(std::move(cache)) {}

  std::string complete(const std::vector<ChatMessage>& messages,
                       const std::vector<std::uint8_t>& image_png) override {
    return cache_.load(request_hash(messages, image_png));
  }

 private:
  TranscriptCache cache_;
};

}  // namespace handover
