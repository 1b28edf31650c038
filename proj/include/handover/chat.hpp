#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace handover {

// One chat turn. A message may carry the annotated image; the wire encoding
// (base64 data URL) happens in the client, so the message itself only flags
// the attachment.
struct ChatMessage {
  std::string role;
  std::string text;
  bool attach_image = false;
};

// Canonical serialization used for request hashing and transcript storage.
inline nlohmann::json messages_to_json(const std::vector<ChatMessage>& messages) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : messages)
    arr.push_back({{"role", m.role}, {"text", m.text}, {"attach_image", m.attach_image}});
  return arr;
}

}  // namespace handover
