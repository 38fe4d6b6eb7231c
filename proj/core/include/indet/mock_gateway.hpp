#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "indet/gateway.hpp"

namespace indet {

struct MockOptions {
  std::uint64_t seed = 0;
  enum class ScoreMode { hash, oracle } score_mode = ScoreMode::hash;
  bool segment_available = true;
  int latency_ms = 0;  // simulated per-call work, for concurrency tests
};

/// Deterministic in-repo stand-in for all five model services.
///
/// Responses are resolved in order: exact fixture (keyed by a stable FNV-1a
/// hash of the canonicalized request), then substring rules, then a seeded
/// format-aware synthesizer. Identical (seed, request) pairs produce
/// identical responses across process restarts.
class MockGateway : public Gateway {
 public:
  explicit MockGateway(MockOptions options = {});

  // --- fixtures ---
  void add_chat_fixture(const std::vector<ChatMessage>& request, std::string response);
  void add_chat_rule(std::string last_user_contains, std::string response);
  void add_vision_rule(std::string image_key_prefix, std::string prompt_contains,
                       std::string response);
  void add_embed_fixture(const std::string& text, std::vector<double> vector);
  /// Oracle entries: in oracle score mode, a text scores 1 for an image key
  /// iff it is listed here (comparison is on normalized, case-folded text).
  void add_score_truth(const std::string& image_key, const std::vector<std::string>& truths);

  /// JSONL fixture file; each line is one of
  ///   {"op":"chat","rule":{"last_user_contains":...},"response":...}
  ///   {"op":"chat","request":[{"role":...,"content":...},...],"response":...}
  ///   {"op":"vision","rule":{"image_key_prefix":...,"prompt_contains":...},"response":...}
  ///   {"op":"embed","text":...,"vector":[...]}
  ///   {"op":"score","image_key":...,"truths":[...]}
  ///   {"op":"options","score_mode":"hash"|"oracle","segment_available":bool}
  void load_fixtures(const std::filesystem::path& path);

  // --- fault injection ---
  /// The next n calls of the op ("chat", "vision", "embed", "score",
  /// "segment") fail with a transient error before producing a response.
  void set_transient_failures(const std::string& op, int n);

  /// Independently measured peak of simultaneous executions inside this
  /// mock for one op; this is what proves the gateway cap holds.
  int peak_concurrent(const std::string& op) const;

  /// Stable canonical form used for exact fixture keys.
  static nlohmann::json canonical_chat_request(const std::vector<ChatMessage>& messages,
                                               const ServiceProfile& profile);

 protected:
  std::string do_chat(const std::vector<ChatMessage>& messages,
                      const ServiceProfile& profile) override;
  std::string do_vision_chat(const ImagePayload& image, const std::vector<ChatMessage>& messages,
                             const ServiceProfile& profile) override;
  std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts,
                                            const ServiceProfile& profile) override;
  std::vector<double> do_score_image_text(const ImagePayload& image,
                                          const std::vector<std::string>& texts,
                                          const ServiceProfile& profile) override;
  RleMask do_segment(const ImagePayload& image, const BBoxNorm& bbox,
                     const ServiceProfile& profile) override;

 private:
  struct Probe {
    std::atomic<int> current{0};
    std::atomic<int> peak{0};
  };
  struct ProbeGuard {
    explicit ProbeGuard(Probe& probe);
    ~ProbeGuard();
    Probe& probe;
  };
  Probe& probe_for(const std::string& op);

  void maybe_fail(const std::string& op);
  void simulate_latency();
  std::uint64_t request_hash(const nlohmann::json& canonical) const;

  std::string synthesize_chat(const std::vector<ChatMessage>& messages, std::uint64_t hash) const;
  std::string synthesize_vision(const ImagePayload& image,
                                const std::vector<ChatMessage>& messages,
                                std::uint64_t hash) const;

  MockOptions options_;
  mutable std::mutex mu_;
  std::map<std::uint64_t, std::string> exact_chat_;
  std::vector<std::pair<std::string, std::string>> chat_rules_;
  struct VisionRule {
    std::string key_prefix;
    std::string prompt_contains;
    std::string response;
  };
  std::vector<VisionRule> vision_rules_;
  std::map<std::string, std::vector<double>> embed_fixtures_;
  std::map<std::string, std::set<std::string>> score_truths_;
  std::map<std::string, int> transient_failures_;
  std::map<std::string, std::unique_ptr<Probe>> probes_;
};

}  // namespace indet
