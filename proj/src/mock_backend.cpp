#include "figqa/mock_backend.hpp"

#include <sstream>

#include <json.hpp>

#include "figqa/errors.hpp"
#include "figqa/text_util.hpp"

namespace figqa {

using json = nlohmann::json;

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("mock script not found: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

MockScript MockScript::from_json_text(const std::string& text) {
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ConfigError("mock script is not a JSON object");
  MockScript script;
  if (doc.contains("responses")) {
    for (const auto& [digest, reply] : doc.at("responses").items()) script.responses[digest] = reply.get<std::string>();
  }
  if (doc.contains("rules")) {
    for (const json& entry : doc.at("rules")) {
      MockRule rule;
      if (entry.contains("role")) rule.role = model_role_from_string(entry.at("role").get<std::string>());
      if (entry.contains("sample")) rule.sample = entry.at("sample").get<int>();
      if (entry.contains("image")) rule.image_contains = entry.at("image").get<std::string>();
      if (entry.contains("contains")) rule.prompt_contains = entry.at("contains").get<std::vector<std::string>>();
      rule.response = entry.at("response").get<std::string>();
      rule.fail_first = entry.value("fail_first", 0);
      script.rules.push_back(std::move(rule));
    }
  }
  return script;
}

std::string resolve_option_placeholders(const std::string& reply, const std::string& prompt) {
  static constexpr std::string_view kMarker = "{{option:";
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = reply.find(kMarker, pos);
    if (open == std::string::npos) {
      out.append(reply, pos, std::string::npos);
      return out;
    }
    const std::size_t close = reply.find("}}", open);
    if (close == std::string::npos) throw UnscriptedRequest("unterminated option placeholder in mock reply");
    out.append(reply, pos, open - pos);
    const std::string wanted = trim(std::string_view(reply).substr(open + kMarker.size(), close - open - kMarker.size()));
    char letter = 0;
    for (const std::string& line : split(prompt, "\n")) {
      const std::string_view view = trim_view(line);
      if (view.size() > 3 && view[0] >= 'A' && view[0] <= 'Z' && view[1] == '.' && view[2] == ' ' &&
          trim_view(view.substr(3)) == wanted) {
        letter = view[0];
        break;
      }
    }
    if (letter == 0) throw UnscriptedRequest("no option line matches placeholder text: " + wanted);
    out.push_back(letter);
    pos = close + 2;
  }
}

MockBackend::MockBackend(MockScript script, std::optional<std::filesystem::path> ledger_path)
    : script_(std::move(script)) {
  if (ledger_path) {
    ledger_file_.emplace(*ledger_path, std::ios::app);
    if (!*ledger_file_) throw ConfigError("cannot open mock ledger: " + ledger_path->string());
  }
}

std::string MockBackend::resolve(const ChatRequest& request, const std::string& digest, int& fail_first) const {
  fail_first = 0;
  if (auto it = script_.responses.find(digest); it != script_.responses.end()) {
    return resolve_option_placeholders(it->second, request.prompt);
  }
  for (const MockRule& rule : script_.rules) {
    if (rule.role && *rule.role != request.role) continue;
    if (rule.sample && *rule.sample != request.sample) continue;
    if (rule.image_contains &&
        (!request.image_ref || request.image_ref->find(*rule.image_contains) == std::string::npos)) {
      continue;
    }
    bool all = true;
    for (const std::string& needle : rule.prompt_contains) {
      if (request.prompt.find(needle) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (!all) continue;
    fail_first = rule.fail_first;
    return resolve_option_placeholders(rule.response, request.prompt);
  }
  throw UnscriptedRequest("unscripted mock request " + digest + " (" + std::string(to_string(request.role)) +
                          ", sample " + std::to_string(request.sample) + "): " + request.prompt.substr(0, 160));
}

std::string MockBackend::send(const EndpointConfig&, const ChatRequest& request) {
  const std::string digest = request_digest(request);
  int fail_first = 0;
  std::string reply = resolve(request, digest, fail_first);

  std::lock_guard lock(mutex_);
  bool failed = false;
  if (fail_first > 0) {
    int& served = failures_served_[digest];
    if (served < fail_first) {
      ++served;
      failed = true;
    }
  }
  ledger_.push_back({digest, request.role, request.sample, failed});
  if (ledger_file_) {
    json line;
    line["digest"] = digest;
    line["role"] = to_string(request.role);
    line["sample"] = request.sample;
    line["failed"] = failed;
    *ledger_file_ << line.dump() << '\n';
    ledger_file_->flush();
  }
  if (failed) throw TransientError("scripted transient failure");
  return reply;
}

std::vector<MockCall> MockBackend::ledger() const {
  std::lock_guard lock(mutex_);
  return ledger_;
}

std::size_t MockBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return ledger_.size();
}

}  // namespace figqa
