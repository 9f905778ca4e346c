#include "figqa/http_backend.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "figqa/digest.hpp"
#include "figqa/errors.hpp"

namespace figqa {
namespace {

using json = nlohmann::json;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

SplitUrl split_base_url(const std::string& base_url) {
  const std::size_t scheme = base_url.find("://");
  if (scheme == std::string::npos) throw ConfigError("base_url needs a scheme: " + base_url);
  const std::size_t path = base_url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = base_url.substr(0, path);
  out.path = path == std::string::npos ? "" : base_url.substr(path);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

std::string image_url(const std::string& image_ref) {
  if (image_ref.starts_with("http://") || image_ref.starts_with("https://") || image_ref.starts_with("data:")) {
    return image_ref;
  }
  std::ifstream in(image_ref, std::ios::binary);
  if (!in) throw ImageUnreadable("cannot open image: " + image_ref);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  const std::string data = bytes.str();
  const auto mime = sniff_image_mime(std::string_view(data).substr(0, 12));
  if (!mime) throw ImageUnreadable("unsupported image format: " + image_ref);
  return "data:" + *mime + ";base64," + base64_encode(data);
}

}  // namespace

std::string build_chat_request_body(const EndpointConfig& config, const ChatRequest& request) {
  json message;
  message["role"] = "user";
  if (request.image_ref) {
    message["content"] = json::array({
        json{{"type", "text"}, {"text", request.prompt}},
        json{{"type", "image_url"}, {"image_url", {{"url", image_url(*request.image_ref)}}}},
    });
  } else {
    message["content"] = request.prompt;
  }
  json body;
  body["model"] = config.model_name;
  body["temperature"] = config.temperature;
  body["messages"] = json::array({message});
  return body.dump();
}

std::string parse_chat_response_body(const std::string& body) {
  const json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded()) throw TransientError("response body is not JSON");
  try {
    const json& content = parsed.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
      std::string text;
      for (const json& part : content) {
        if (part.value("type", "") == "text") text += part.value("text", "");
      }
      return text;
    }
  } catch (const json::exception&) {
  }
  throw TransientError("response body has no choices[0].message.content");
}

std::string HttpChatBackend::send(const EndpointConfig& config, const ChatRequest& request) {
  if (request.image_ref && config.role != ModelRole::kVision) {
    throw ConfigError("text endpoint cannot take image attachments");
  }
  const SplitUrl url = split_base_url(config.base_url);
  httplib::Client client(url.origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config.timeout).count();
  client.set_connection_timeout(static_cast<time_t>(seconds));
  client.set_read_timeout(static_cast<time_t>(seconds));
  client.set_write_timeout(static_cast<time_t>(seconds));

  httplib::Headers headers;
  if (!config.api_key_env.empty()) {
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') throw AuthError("credential variable " + config.api_key_env + " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const std::string body = build_chat_request_body(config, request);
  auto result = client.Post(url.path + "/chat/completions", headers, body, "application/json");
  if (!result) throw TransientError("transport failure: " + httplib::to_string(result.error()));
  const int status = result->status;
  if (status == 401 || status == 403) throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
  if (status == 429 || status >= 500) throw TransientError("HTTP " + std::to_string(status));
  if (status != 200) throw EndpointUnavailable("HTTP " + std::to_string(status) + ": " + result->body);
  return parse_chat_response_body(result->body);
}

}  // namespace figqa
