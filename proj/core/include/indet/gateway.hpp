#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "indet/types.hpp"

namespace indet {

struct GatewayError : PipelineError {
  GatewayError(const std::string& msg, int attempts_in = 1, bool transient_in = false)
      : PipelineError(msg), attempts(attempts_in), transient(transient_in) {}
  int attempts;
  bool transient;
};

/// Retryable fault (HTTP 5xx, timeouts, injected mock failures).
struct TransientError : GatewayError {
  explicit TransientError(const std::string& msg) : GatewayError(msg, 1, true) {}
};

enum class ChatRole { system, user, assistant };

std::string_view to_string(ChatRole role);

/// Encoded image plus a stable key. The key identifies the pixel content
/// (e.g. "img1" or "img1#vp:box:..."), drives mock fixtures, and is part of
/// the canonical request in mock mode.
struct ImagePayload {
  std::string key;
  std::vector<std::uint8_t> bytes;
  std::string media_type = "image/x-portable-pixmap";
};

struct ChatMessage {
  ChatRole role = ChatRole::user;
  std::string content;
  std::optional<ImagePayload> image;
};

/// Empty when valid: system at most once and only first; after the optional
/// system turn, roles alternate user/assistant starting with user.
std::vector<std::string> message_violations(const std::vector<ChatMessage>& messages);

struct RetryPolicy {
  int max_attempts = 3;
  int base_delay_ms = 100;
  double factor = 2.0;
  double jitter = 0.25;  // fraction of the delay
};

struct ServiceProfile {
  std::string name;      // rate-limit and stats bucket
  std::string endpoint;  // http(s)://host[:port]/path — unused by mocks
  std::string model;
  double temperature = 0.7;
  int max_in_flight = 4;
  RetryPolicy retry;
  int embed_dim = 16;  // expected embedding dimension (mocks generate it)
  std::size_t max_payload_bytes = 16ull << 20;
};

struct RequestStats {
  std::uint64_t count = 0;
  std::uint64_t retries = 0;
  double total_s = 0.0;
  int max_in_flight_seen = 0;
};

/// Uniform client for the five model capabilities. Public methods enforce
/// the per-profile in-flight cap, the retry policy, payload guards, and
/// instrumentation; subclasses implement transport only. Shareable across
/// threads; calls block while a profile is at its cap.
class Gateway {
 public:
  virtual ~Gateway() = default;

  std::string chat(const std::vector<ChatMessage>& messages, const ServiceProfile& profile);
  std::string vision_chat(const ImagePayload& image, const std::vector<ChatMessage>& messages,
                          const ServiceProfile& profile);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const ServiceProfile& profile);
  std::vector<double> score_image_text(const ImagePayload& image,
                                       const std::vector<std::string>& texts,
                                       const ServiceProfile& profile);
  RleMask segment(const ImagePayload& image, const BBoxNorm& bbox, const ServiceProfile& profile);

  std::map<std::string, RequestStats> stats() const;
  void reset_stats();

 protected:
  virtual std::string do_chat(const std::vector<ChatMessage>& messages,
                              const ServiceProfile& profile) = 0;
  virtual std::string do_vision_chat(const ImagePayload& image,
                                     const std::vector<ChatMessage>& messages,
                                     const ServiceProfile& profile) = 0;
  virtual std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts,
                                                    const ServiceProfile& profile) = 0;
  virtual std::vector<double> do_score_image_text(const ImagePayload& image,
                                                  const std::vector<std::string>& texts,
                                                  const ServiceProfile& profile) = 0;
  virtual RleMask do_segment(const ImagePayload& image, const BBoxNorm& bbox,
                             const ServiceProfile& profile) = 0;

 private:
  struct Limiter {
    std::mutex mu;
    std::condition_variable cv;
    int in_flight = 0;
  };
  Limiter& limiter_for(const std::string& name);

  template <typename F>
  auto run(const ServiceProfile& profile, F&& op) -> decltype(op());

  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Limiter>> limiters_;
  std::map<std::string, RequestStats> stats_;
};

}  // namespace indet
