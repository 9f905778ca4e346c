#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace figqa {

enum class ModelRole { kText, kVision };

std::string_view to_string(ModelRole role);
ModelRole model_role_from_string(std::string_view text);

struct EndpointConfig {
  ModelRole role = ModelRole::kText;
  std::string base_url;
  std::string model_name;
  double temperature = 1.0;
  int max_retries = 2;  // three attempts in total
  std::chrono::milliseconds timeout{60'000};
  std::chrono::milliseconds initial_backoff{1'000};
  std::string api_key_env;
  double requests_per_minute = 0.0;  // 0 disables rate limiting
  int max_in_flight = 8;
};

struct ChatRequest {
  ModelRole role = ModelRole::kText;
  std::string prompt;
  std::optional<std::string> image_ref;
  // Distinguishes repeated stochastic samples of the same prompt.
  int sample = 0;
};

/// Stable hash over role, prompt, attachment and sample index.
std::string request_digest(const ChatRequest& request);

struct ModelTranscript {
  std::string request_digest;
  std::string raw_response;
  std::chrono::milliseconds latency{0};
  int attempt_count = 0;
};

struct Completion {
  std::string text;
  ModelTranscript transcript;
};

/// Transport behind a gateway. Implementations throw TransientError for
/// retryable failures and AuthError for rejected credentials.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::string send(const EndpointConfig& config, const ChatRequest& request) = 0;
};

/// Token bucket sized for one request of burst.
class RateLimiter {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  RateLimiter(double requests_per_minute, Sleeper sleeper);
  void acquire();

 private:
  double rate_per_ms_;
  double tokens_ = 1.0;
  std::chrono::steady_clock::time_point last_;
  Sleeper sleeper_;
  std::mutex mutex_;
};

struct GatewayHooks {
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Model access: retries with exponential backoff, rate limiting and
/// an in-flight budget in front of a backend. Safe to share across threads.
class ModelGateway {
 public:
  ModelGateway(EndpointConfig config, std::shared_ptr<ModelBackend> backend, GatewayHooks hooks = {});

  Completion complete_text(std::string prompt, int sample = 0);
  Completion complete_vision(std::string prompt, std::string image_ref, int sample = 0);

  const EndpointConfig& config() const { return config_; }

 private:
  Completion issue(ChatRequest request);

  EndpointConfig config_;
  std::shared_ptr<ModelBackend> backend_;
  std::function<void(std::chrono::milliseconds)> sleep_;
  RateLimiter limiter_;
  std::mutex budget_mutex_;
  std::condition_variable budget_cv_;
  int in_flight_ = 0;
};

/// Throws ImageUnreadable unless `image_ref` is a URL or a readable PNG, JPEG,
/// GIF or WebP file.
void check_image_readable(const std::string& image_ref);

/// MIME type of a supported raster file, detected from its magic bytes.
std::optional<std::string> sniff_image_mime(std::string_view header);

/// Test seam: terminates the process immediately before the call that would
/// exceed `limit`, emulating a crash mid-stage.
class FaultInjectingBackend : public ModelBackend {
 public:
  FaultInjectingBackend(std::shared_ptr<ModelBackend> inner, long limit) : inner_(std::move(inner)), limit_(limit) {}
  std::string send(const EndpointConfig& config, const ChatRequest& request) override;

 private:
  std::shared_ptr<ModelBackend> inner_;
  long limit_;
  long calls_ = 0;
  std::mutex mutex_;
};

}  // namespace figqa
