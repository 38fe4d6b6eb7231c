#include "indet/gateway.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "indet/text.hpp"

namespace indet {

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::system: return "system";
    case ChatRole::user: return "user";
    case ChatRole::assistant: return "assistant";
  }
  return "user";
}

std::vector<std::string> message_violations(const std::vector<ChatMessage>& messages) {
  std::vector<std::string> out;
  if (messages.empty()) {
    out.push_back("message list is empty");
    return out;
  }
  std::size_t start = 0;
  if (messages[0].role == ChatRole::system) start = 1;
  for (std::size_t i = start; i < messages.size(); ++i) {
    if (messages[i].role == ChatRole::system) {
      out.push_back("system message at position " + std::to_string(i) +
                    " (allowed at most once, only first)");
    }
  }
  // After the optional system turn, the exchange alternates user/assistant
  // starting and ending with user.
  for (std::size_t i = start; i < messages.size(); ++i) {
    const bool expect_user = ((i - start) % 2) == 0;
    const ChatRole expected = expect_user ? ChatRole::user : ChatRole::assistant;
    if (messages[i].role != expected && messages[i].role != ChatRole::system) {
      out.push_back("role at position " + std::to_string(i) + " breaks user/assistant alternation");
    }
  }
  if (messages.back().role != ChatRole::user) {
    out.push_back("final message must be a user turn");
  }
  return out;
}

Gateway::Limiter& Gateway::limiter_for(const std::string& name) {
  std::lock_guard lock(mu_);
  auto& slot = limiters_[name];
  if (!slot) slot = std::make_unique<Limiter>();
  return *slot;
}

namespace {

int backoff_delay_ms(const RetryPolicy& policy, const std::string& bucket, int attempt) {
  double delay = policy.base_delay_ms * std::pow(policy.factor, attempt - 1);
  // Deterministic jitter derived from (bucket, attempt).
  const std::uint64_t h = fnv1a64(bucket + "#" + std::to_string(attempt));
  delay *= 1.0 + policy.jitter * (static_cast<double>(h % 1000) / 1000.0);
  return static_cast<int>(delay);
}

}  // namespace

template <typename F>
auto Gateway::run(const ServiceProfile& profile, F&& op) -> decltype(op()) {
  Limiter& limiter = limiter_for(profile.name);
  {
    std::unique_lock lock(limiter.mu);
    limiter.cv.wait(lock, [&] { return limiter.in_flight < profile.max_in_flight; });
    ++limiter.in_flight;
    std::lock_guard slock(mu_);
    auto& st = stats_[profile.name];
    st.max_in_flight_seen = std::max(st.max_in_flight_seen, limiter.in_flight);
  }
  struct Release {
    Limiter& l;
    ~Release() {
      std::lock_guard lock(l.mu);
      --l.in_flight;
      l.cv.notify_one();
    }
  } release{limiter};

  const int max_attempts = std::max(1, profile.retry.max_attempts);
  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 1;; ++attempt) {
    try {
      auto result = op();
      std::lock_guard lock(mu_);
      auto& st = stats_[profile.name];
      ++st.count;
      st.retries += static_cast<std::uint64_t>(attempt - 1);
      st.total_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return result;
    } catch (const TransientError& e) {
      if (attempt >= max_attempts) {
        std::lock_guard lock(mu_);
        auto& st = stats_[profile.name];
        ++st.count;
        st.retries += static_cast<std::uint64_t>(attempt - 1);
        st.total_s +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        throw GatewayError(std::string(e.what()) + " (after " + std::to_string(attempt) +
                               " attempts)",
                           attempt, true);
      }
      const int delay = backoff_delay_ms(profile.retry, profile.name, attempt);
      if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
  }
}

std::string Gateway::chat(const std::vector<ChatMessage>& messages, const ServiceProfile& profile) {
  if (auto v = message_violations(messages); !v.empty()) {
    throw GatewayError("invalid message sequence: " + v.front());
  }
  auto reply = run(profile, [&] { return do_chat(messages, profile); });
  if (normalize_text(reply).empty()) throw GatewayError("empty response");
  return reply;
}

std::string Gateway::vision_chat(const ImagePayload& image,
                                 const std::vector<ChatMessage>& messages,
                                 const ServiceProfile& profile) {
  if (auto v = message_violations(messages); !v.empty()) {
    throw GatewayError("invalid message sequence: " + v.front());
  }
  if (image.bytes.size() > profile.max_payload_bytes) {
    throw GatewayError("payload too large: " + std::to_string(image.bytes.size()) + " bytes");
  }
  auto reply = run(profile, [&] { return do_vision_chat(image, messages, profile); });
  if (normalize_text(reply).empty()) throw GatewayError("empty response");
  return reply;
}

std::vector<std::vector<double>> Gateway::embed(const std::vector<std::string>& texts,
                                                const ServiceProfile& profile) {
  if (texts.empty()) return {};
  auto vectors = run(profile, [&] { return do_embed(texts, profile); });
  if (vectors.size() != texts.size()) {
    throw GatewayError("embedding count mismatch: " + std::to_string(vectors.size()) + " for " +
                       std::to_string(texts.size()) + " texts");
  }
  for (const auto& v : vectors) {
    if (v.size() != vectors.front().size()) {
      throw GatewayError("embedding dimension mismatch within batch");
    }
  }
  return vectors;
}

std::vector<double> Gateway::score_image_text(const ImagePayload& image,
                                              const std::vector<std::string>& texts,
                                              const ServiceProfile& profile) {
  if (texts.empty()) return {};
  if (image.bytes.size() > profile.max_payload_bytes) {
    throw GatewayError("payload too large: " + std::to_string(image.bytes.size()) + " bytes");
  }
  auto scores = run(profile, [&] { return do_score_image_text(image, texts, profile); });
  if (scores.size() != texts.size()) {
    throw GatewayError("score count mismatch: " + std::to_string(scores.size()) + " for " +
                       std::to_string(texts.size()) + " texts");
  }
  return scores;
}

RleMask Gateway::segment(const ImagePayload& image, const BBoxNorm& bbox,
                         const ServiceProfile& profile) {
  if (!bbox.valid()) throw GatewayError("invalid bbox for segmentation");
  return run(profile, [&] { return do_segment(image, bbox, profile); });
}

std::map<std::string, RequestStats> Gateway::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void Gateway::reset_stats() {
  std::lock_guard lock(mu_);
  stats_.clear();
}

}  // namespace indet
