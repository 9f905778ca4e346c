#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "figqa/figure_context.hpp"
#include "figqa/gateway.hpp"
#include "figqa/jsonl.hpp"
#include "figqa/latex_prep.hpp"

namespace figqa {

/// Endpoint slots a run may configure.
inline constexpr const char* kTextEndpoint = "text";
inline constexpr const char* kVisionEndpoint = "vision";
inline constexpr const char* kFigureAnnotatorEndpoint = "figure_annotator";
inline constexpr const char* kQuestionAnnotatorEndpoint = "question_annotator";
inline constexpr const char* kEvaluatorEndpoint = "evaluator";

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path latex_dir;
  std::filesystem::path prompts_dir;
  std::filesystem::path output_dir;
  double threshold = kDefaultMatchThreshold;
  std::uint64_t seed = 0;
  int concurrency = 4;
  std::size_t batch_size = 1000;
  std::optional<std::size_t> max_batches;
  std::optional<std::size_t> target_size;
  int macro_depth = kDefaultMacroDepth;
  std::string paragraph_separator = std::string(kDefaultParagraphSeparator);
  std::vector<std::string> citation_commands = kDefaultCitationCommands;
  bool unanimous_vote = false;
  std::map<std::string, EndpointConfig> endpoints;
  std::size_t eval_sample_size = 1000;
  std::size_t max_unevaluated = 0;
  std::optional<std::filesystem::path> mock_script;

  /// Checks ranges; throws ConfigError.
  void validate() const;
};

/// Reads a JSON config. Relative paths resolve against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const Json& doc, const std::filesystem::path& base_dir);

EndpointConfig endpoint_from_json(const Json& doc);
Json to_json(const EndpointConfig& endpoint);

/// Hash of every setting that affects stage outputs. Paths, concurrency and
/// credentials are excluded.
std::string config_digest(const RunConfig& config);

}  // namespace figqa
