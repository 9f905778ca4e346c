#pragma once

#include <string>

#include "figqa/gateway.hpp"

namespace figqa {

/// OpenAI-compatible chat-completions transport. Images are sent inline as
/// base64 data URLs unless they already are URLs.
class HttpChatBackend : public ModelBackend {
 public:
  std::string send(const EndpointConfig& config, const ChatRequest& request) override;
};

/// JSON request body for a chat-completions POST.
std::string build_chat_request_body(const EndpointConfig& config, const ChatRequest& request);

/// Assistant text from a chat-completions response body.
std::string parse_chat_response_body(const std::string& body);

}  // namespace figqa
