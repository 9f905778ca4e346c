#include "figqa/gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "figqa/digest.hpp"
#include "figqa/errors.hpp"

namespace figqa {

std::string_view to_string(ModelRole role) { return role == ModelRole::kText ? "text" : "vision"; }

ModelRole model_role_from_string(std::string_view text) {
  if (text == "text") return ModelRole::kText;
  if (text == "vision") return ModelRole::kVision;
  throw ConfigError("unknown model role: " + std::string(text));
}

std::string request_digest(const ChatRequest& request) {
  nlohmann::ordered_json canonical;
  canonical["role"] = to_string(request.role);
  canonical["prompt"] = request.prompt;
  canonical["image"] = request.image_ref ? nlohmann::ordered_json(*request.image_ref) : nlohmann::ordered_json();
  canonical["sample"] = request.sample;
  return sha256_hex(canonical.dump());
}

std::optional<std::string> sniff_image_mime(std::string_view header) {
  if (header.size() >= 8 && header.substr(0, 8) == std::string_view("\x89PNG\r\n\x1a\n", 8)) return "image/png";
  if (header.size() >= 3 && header.substr(0, 3) == "\xFF\xD8\xFF") return "image/jpeg";
  if (header.size() >= 4 && header.substr(0, 4) == "GIF8") return "image/gif";
  if (header.size() >= 12 && header.substr(0, 4) == "RIFF" && header.substr(8, 4) == "WEBP") return "image/webp";
  return std::nullopt;
}

void check_image_readable(const std::string& image_ref) {
  if (image_ref.starts_with("http://") || image_ref.starts_with("https://") || image_ref.starts_with("data:image/")) {
    return;
  }
  std::ifstream in(image_ref, std::ios::binary);
  if (!in) throw ImageUnreadable("cannot open image: " + image_ref);
  std::string header(12, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header.size()));
  header.resize(static_cast<std::size_t>(in.gcount()));
  if (!sniff_image_mime(header)) throw ImageUnreadable("unsupported image format: " + image_ref);
}

RateLimiter::RateLimiter(double requests_per_minute, Sleeper sleeper)
    : rate_per_ms_(requests_per_minute / 60'000.0), last_(std::chrono::steady_clock::now()), sleeper_(std::move(sleeper)) {}

void RateLimiter::acquire() {
  if (rate_per_ms_ <= 0.0) return;
  std::chrono::milliseconds wait{0};
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    tokens_ = std::min(1.0, tokens_ + elapsed * rate_per_ms_);
    tokens_ -= 1.0;
    if (tokens_ < 0.0) wait = std::chrono::milliseconds(static_cast<long>(-tokens_ / rate_per_ms_ + 0.5));
  }
  if (wait.count() > 0) sleeper_(wait);
}

ModelGateway::ModelGateway(EndpointConfig config, std::shared_ptr<ModelBackend> backend, GatewayHooks hooks)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      sleep_(hooks.sleep ? std::move(hooks.sleep)
                         : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      limiter_(config_.requests_per_minute, sleep_) {
  if (!backend_) throw ConfigError("gateway needs a backend");
  if (config_.temperature < 0.0) throw ConfigError("temperature must be non-negative");
  if (config_.max_retries < 0) throw ConfigError("max_retries must be non-negative");
}

Completion ModelGateway::complete_text(std::string prompt, int sample) {
  ChatRequest request;
  request.role = config_.role;
  request.prompt = std::move(prompt);
  request.sample = sample;
  return issue(std::move(request));
}

Completion ModelGateway::complete_vision(std::string prompt, std::string image_ref, int sample) {
  if (config_.role != ModelRole::kVision) throw ConfigError("text endpoint cannot take image attachments");
  check_image_readable(image_ref);
  ChatRequest request;
  request.role = ModelRole::kVision;
  request.prompt = std::move(prompt);
  request.image_ref = std::move(image_ref);
  request.sample = sample;
  return issue(std::move(request));
}

Completion ModelGateway::issue(ChatRequest request) {
  Completion completion;
  completion.transcript.request_digest = request_digest(request);
  {
    std::unique_lock lock(budget_mutex_);
    budget_cv_.wait(lock, [&] { return config_.max_in_flight <= 0 || in_flight_ < config_.max_in_flight; });
    ++in_flight_;
  }
  struct Release {
    ModelGateway* self;
    ~Release() {
      {
        std::lock_guard lock(self->budget_mutex_);
        --self->in_flight_;
      }
      self->budget_cv_.notify_one();
    }
  } release{this};

  const auto started = std::chrono::steady_clock::now();
  std::chrono::milliseconds backoff = config_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    completion.transcript.attempt_count = attempt;
    limiter_.acquire();
    try {
      completion.text = backend_->send(config_, request);
      break;
    } catch (const TransientError& e) {
      if (attempt > config_.max_retries) {
        throw EndpointUnavailable("endpoint " + config_.model_name + " unavailable after " + std::to_string(attempt) +
                                  " attempts: " + e.what());
      }
      sleep_(backoff);
      backoff *= 2;
    }
  }
  completion.transcript.raw_response = completion.text;
  completion.transcript.latency =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  return completion;
}

std::string FaultInjectingBackend::send(const EndpointConfig& config, const ChatRequest& request) {
  {
    std::lock_guard lock(mutex_);
    if (calls_ >= limit_) std::_Exit(75);
    ++calls_;
  }
  return inner_->send(config, request);
}

}  // namespace figqa
