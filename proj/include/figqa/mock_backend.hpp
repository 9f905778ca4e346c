#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "figqa/gateway.hpp"

namespace figqa {

/// One scripted reply. A rule applies when every constraint it sets holds.
struct MockRule {
  std::optional<ModelRole> role;
  std::optional<int> sample;
  std::optional<std::string> image_contains;
  std::vector<std::string> prompt_contains;
  std::string response;
  int fail_first = 0;  // transient failures before the first success, per digest
};

/// Deterministic test double. Replies come from exact request digests first,
/// then from the first matching rule. Anything else throws UnscriptedRequest.
///
/// Script file (JSON):
///   {"responses": {"<digest>": "reply", ...},
///    "rules": [{"role": "text", "sample": 0, "image": "fig1",
///               "contains": ["..."], "response": "...", "fail_first": 0}, ...]}
///
/// A reply may contain {{option:TEXT}}, replaced by the letter of the option
/// line "X. TEXT" found in the prompt.
struct MockScript {
  std::map<std::string, std::string> responses;
  std::vector<MockRule> rules;

  static MockScript load(const std::filesystem::path& path);
  static MockScript from_json_text(const std::string& text);
};

struct MockCall {
  std::string digest;
  ModelRole role;
  int sample;
  bool failed;
};

class MockBackend : public ModelBackend {
 public:
  explicit MockBackend(MockScript script, std::optional<std::filesystem::path> ledger_path = std::nullopt);

  std::string send(const EndpointConfig& config, const ChatRequest& request) override;

  std::vector<MockCall> ledger() const;
  std::size_t call_count() const;

 private:
  std::string resolve(const ChatRequest& request, const std::string& digest, int& fail_first) const;

  MockScript script_;
  mutable std::mutex mutex_;
  std::vector<MockCall> ledger_;
  std::map<std::string, int> failures_served_;
  std::optional<std::ofstream> ledger_file_;
};

/// Replaces {{option:TEXT}} markers using the "X. TEXT" option lines of `prompt`.
std::string resolve_option_placeholders(const std::string& reply, const std::string& prompt);

}  // namespace figqa
