#include "figqa/run_config.hpp"

#include <fstream>
#include <sstream>

#include "figqa/digest.hpp"
#include "figqa/errors.hpp"

namespace figqa {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

template <typename T>
T get_or(const Json& doc, const char* field, T fallback) {
  if (!doc.contains(field) || doc.at(field).is_null()) return fallback;
  try {
    return doc.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + field + "': " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in (0, 1]");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (macro_depth <= 0) throw ConfigError("macro_depth must be positive");
  if (paragraph_separator.empty()) throw ConfigError("paragraph_separator must be non-empty");
  if (concurrency <= 0) throw ConfigError("concurrency must be positive");
  for (const auto& [name, endpoint] : endpoints) {
    if (endpoint.temperature < 0.0) throw ConfigError("endpoint " + name + ": negative temperature");
    if (endpoint.max_retries < 0) throw ConfigError("endpoint " + name + ": negative max_retries");
  }
}

EndpointConfig endpoint_from_json(const Json& doc) {
  EndpointConfig endpoint;
  endpoint.role = model_role_from_string(get_or<std::string>(doc, "role", "text"));
  endpoint.base_url = get_or<std::string>(doc, "base_url", "");
  endpoint.model_name = get_or<std::string>(doc, "model", "");
  endpoint.temperature = get_or<double>(doc, "temperature", 1.0);
  endpoint.max_retries = get_or<int>(doc, "max_retries", 2);
  endpoint.timeout = std::chrono::milliseconds(static_cast<long>(get_or<double>(doc, "timeout_s", 60.0) * 1000));
  endpoint.initial_backoff = std::chrono::milliseconds(get_or<long>(doc, "initial_backoff_ms", 1000));
  endpoint.api_key_env = get_or<std::string>(doc, "api_key_env", "");
  endpoint.requests_per_minute = get_or<double>(doc, "requests_per_minute", 0.0);
  endpoint.max_in_flight = get_or<int>(doc, "max_in_flight", 8);
  return endpoint;
}

Json to_json(const EndpointConfig& endpoint) {
  Json out;
  out["role"] = to_string(endpoint.role);
  out["base_url"] = endpoint.base_url;
  out["model"] = endpoint.model_name;
  out["temperature"] = endpoint.temperature;
  out["max_retries"] = endpoint.max_retries;
  return out;
}

RunConfig run_config_from_json(const Json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig config;
  if (doc.contains("corpus")) config.corpus = resolve(base_dir, get_or<std::string>(doc, "corpus", ""));
  if (doc.contains("latex_dir")) config.latex_dir = resolve(base_dir, get_or<std::string>(doc, "latex_dir", ""));
  if (doc.contains("prompts_dir")) config.prompts_dir = resolve(base_dir, get_or<std::string>(doc, "prompts_dir", ""));
  if (doc.contains("output_dir")) config.output_dir = resolve(base_dir, get_or<std::string>(doc, "output_dir", ""));
  if (doc.contains("mock_script")) config.mock_script = resolve(base_dir, get_or<std::string>(doc, "mock_script", ""));
  config.threshold = get_or<double>(doc, "threshold", config.threshold);
  config.seed = get_or<std::uint64_t>(doc, "seed", config.seed);
  config.concurrency = get_or<int>(doc, "concurrency", config.concurrency);
  config.batch_size = get_or<std::size_t>(doc, "batch_size", config.batch_size);
  if (doc.contains("max_batches") && !doc.at("max_batches").is_null()) {
    config.max_batches = get_or<std::size_t>(doc, "max_batches", 0);
  }
  if (doc.contains("target_size") && !doc.at("target_size").is_null()) {
    config.target_size = get_or<std::size_t>(doc, "target_size", 0);
  }
  config.macro_depth = get_or<int>(doc, "macro_depth", config.macro_depth);
  config.paragraph_separator = get_or<std::string>(doc, "paragraph_separator", config.paragraph_separator);
  config.citation_commands = get_or<std::vector<std::string>>(doc, "citation_commands", config.citation_commands);
  config.unanimous_vote = get_or<bool>(doc, "unanimous_vote", config.unanimous_vote);
  config.eval_sample_size = get_or<std::size_t>(doc, "eval_sample_size", config.eval_sample_size);
  config.max_unevaluated = get_or<std::size_t>(doc, "max_unevaluated", config.max_unevaluated);
  if (doc.contains("endpoints")) {
    for (const auto& [name, endpoint] : doc.at("endpoints").items()) {
      config.endpoints[name] = endpoint_from_json(endpoint);
    }
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const Json doc = Json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
  return run_config_from_json(doc, path.parent_path());
}

std::string config_digest(const RunConfig& config) {
  Json canonical;
  canonical["threshold"] = config.threshold;
  canonical["seed"] = config.seed;
  canonical["batch_size"] = config.batch_size;
  canonical["macro_depth"] = config.macro_depth;
  canonical["paragraph_separator"] = config.paragraph_separator;
  canonical["citation_commands"] = config.citation_commands;
  canonical["unanimous_vote"] = config.unanimous_vote;
  Json endpoints = Json::object();
  for (const auto& [name, endpoint] : config.endpoints) endpoints[name] = to_json(endpoint);
  canonical["endpoints"] = endpoints;
  return sha256_hex(canonical.dump());
}

}  // namespace figqa
