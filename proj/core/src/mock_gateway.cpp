#include "indet/mock_gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "indet/image.hpp"
#include "indet/jsonl.hpp"
#include "indet/text.hpp"

namespace indet {

using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double unit_interval(std::uint64_t h) {
  return static_cast<double>(h % 1000000007ull) / 1000000007.0;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& adjective_pool() {
  static const std::vector<std::string> pool = {
      "left", "right", "central", "small", "large", "nearby",
      "distant", "bright", "dark", "quiet", "busy", "tall"};
  return pool;
}

const std::vector<std::string>& scene_phrase_pool() {
  static const std::vector<std::string> pool = {
      "sitting near the window", "standing in the open",   "placed at the center",
      "resting by the wall",     "facing the camera",      "caught in motion",
      "partly in shadow",        "under bright light"};
  return pool;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {"a",  "an", "the", "in", "on",   "of",  "with",
                                              "and", "or", "at",  "to", "by",  "near", "is",
                                              "are", "who", "that", "this",  "it"};
  return words;
}

std::string pick(const std::vector<std::string>& pool, std::uint64_t h) {
  return pool[h % pool.size()];
}

/// Lines of the form "<name>: [x, y, x, y]..." in a global task prompt.
std::vector<std::string> parse_coordinate_line_names(const std::string& content) {
  std::vector<std::string> names;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(": [");
    if (colon == std::string::npos) continue;
    if (line.find(']', colon) == std::string::npos) continue;
    std::string name = normalize_text(line.substr(0, colon));
    if (!name.empty()) names.push_back(std::move(name));
  }
  return names;
}

std::string first_alias(const std::string& name) {
  const auto slash = name.find('/');
  return slash == std::string::npos ? name : name.substr(0, slash);
}

}  // namespace

MockGateway::MockGateway(MockOptions options) : options_(options) {}

json MockGateway::canonical_chat_request(const std::vector<ChatMessage>& messages,
                                         const ServiceProfile& profile) {
  json msgs = json::array();
  for (const auto& m : messages) {
    json jm{{"role", std::string(to_string(m.role))}, {"content", m.content}};
    if (m.image) jm["image_key"] = m.image->key;
    msgs.push_back(std::move(jm));
  }
  return json{{"op", "chat"},
              {"model", profile.model},
              {"temperature", profile.temperature},
              {"messages", std::move(msgs)}};
}

std::uint64_t MockGateway::request_hash(const json& canonical) const {
  return fnv1a64(canonical.dump());
}

void MockGateway::add_chat_fixture(const std::vector<ChatMessage>& request, std::string response) {
  ServiceProfile any;  // fixtures match on messages only
  any.model.clear();
  any.temperature = 0.0;
  std::lock_guard lock(mu_);
  exact_chat_[request_hash(canonical_chat_request(request, any))] = std::move(response);
}

void MockGateway::add_chat_rule(std::string last_user_contains, std::string response) {
  std::lock_guard lock(mu_);
  chat_rules_.emplace_back(std::move(last_user_contains), std::move(response));
}

void MockGateway::add_vision_rule(std::string image_key_prefix, std::string prompt_contains,
                                  std::string response) {
  std::lock_guard lock(mu_);
  vision_rules_.push_back({std::move(image_key_prefix), std::move(prompt_contains),
                           std::move(response)});
}

void MockGateway::add_embed_fixture(const std::string& text, std::vector<double> vector) {
  std::lock_guard lock(mu_);
  embed_fixtures_[text] = std::move(vector);
}

void MockGateway::add_score_truth(const std::string& image_key,
                                  const std::vector<std::string>& truths) {
  std::lock_guard lock(mu_);
  auto& set = score_truths_[image_key];
  for (const auto& t : truths) set.insert(casefold(normalize_text(t)));
}

void MockGateway::load_fixtures(const std::filesystem::path& path) {
  for (const auto& j : read_jsonl(path)) {
    const std::string op = j.at("op").get<std::string>();
    if (op == "chat") {
      if (j.contains("rule")) {
        add_chat_rule(j.at("rule").at("last_user_contains").get<std::string>(),
                      j.at("response").get<std::string>());
      } else {
        std::vector<ChatMessage> msgs;
        for (const auto& jm : j.at("request")) {
          ChatMessage m;
          const std::string role = jm.at("role").get<std::string>();
          m.role = role == "system" ? ChatRole::system
                                    : role == "assistant" ? ChatRole::assistant : ChatRole::user;
          m.content = jm.at("content").get<std::string>();
          msgs.push_back(std::move(m));
        }
        add_chat_fixture(msgs, j.at("response").get<std::string>());
      }
    } else if (op == "vision") {
      const auto& r = j.at("rule");
      add_vision_rule(r.value("image_key_prefix", ""), r.value("prompt_contains", ""),
                      j.at("response").get<std::string>());
    } else if (op == "embed") {
      add_embed_fixture(j.at("text").get<std::string>(),
                        j.at("vector").get<std::vector<double>>());
    } else if (op == "score") {
      add_score_truth(j.at("image_key").get<std::string>(),
                      j.at("truths").get<std::vector<std::string>>());
    } else if (op == "options") {
      std::lock_guard lock(mu_);
      if (j.contains("score_mode")) {
        options_.score_mode = j.at("score_mode").get<std::string>() == "oracle"
                                  ? MockOptions::ScoreMode::oracle
                                  : MockOptions::ScoreMode::hash;
      }
      if (j.contains("segment_available")) {
        options_.segment_available = j.at("segment_available").get<bool>();
      }
    } else {
      throw PipelineError("unknown fixture op: " + op);
    }
  }
}

void MockGateway::set_transient_failures(const std::string& op, int n) {
  std::lock_guard lock(mu_);
  transient_failures_[op] = n;
}

MockGateway::Probe& MockGateway::probe_for(const std::string& op) {
  std::lock_guard lock(mu_);
  auto& slot = probes_[op];
  if (!slot) slot = std::make_unique<Probe>();
  return *slot;
}

MockGateway::ProbeGuard::ProbeGuard(Probe& probe_in) : probe(probe_in) {
  const int now = probe.current.fetch_add(1) + 1;
  int peak = probe.peak.load();
  while (now > peak && !probe.peak.compare_exchange_weak(peak, now)) {
  }
}

MockGateway::ProbeGuard::~ProbeGuard() { probe.current.fetch_sub(1); }

int MockGateway::peak_concurrent(const std::string& op) const {
  auto* self = const_cast<MockGateway*>(this);
  std::lock_guard lock(self->mu_);
  const auto it = self->probes_.find(op);
  return it == self->probes_.end() ? 0 : it->second->peak.load();
}

void MockGateway::maybe_fail(const std::string& op) {
  std::lock_guard lock(mu_);
  auto it = transient_failures_.find(op);
  if (it != transient_failures_.end() && it->second > 0) {
    --it->second;
    throw TransientError("injected transient failure (" + op + ")");
  }
}

void MockGateway::simulate_latency() {
  if (options_.latency_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(options_.latency_ms));
  }
}

std::string MockGateway::do_chat(const std::vector<ChatMessage>& messages,
                                 const ServiceProfile& profile) {
  ProbeGuard probe_guard(probe_for("chat"));
  maybe_fail("chat");
  simulate_latency();
  // Exact fixtures are keyed with a neutral profile so that model name and
  // temperature do not have to be repeated in fixture files.
  ServiceProfile neutral;
  neutral.model.clear();
  neutral.temperature = 0.0;
  const std::uint64_t exact = request_hash(canonical_chat_request(messages, neutral));
  {
    std::lock_guard lock(mu_);
    if (auto it = exact_chat_.find(exact); it != exact_chat_.end()) return it->second;
    const std::string& last_user = messages.back().content;
    for (const auto& [needle, response] : chat_rules_) {
      if (last_user.find(needle) != std::string::npos) return response;
    }
  }
  const std::uint64_t h = mix(options_.seed, request_hash(canonical_chat_request(messages, profile)));
  return synthesize_chat(messages, h);
}

std::string MockGateway::do_vision_chat(const ImagePayload& image,
                                        const std::vector<ChatMessage>& messages,
                                        const ServiceProfile& profile) {
  ProbeGuard probe_guard(probe_for("vision"));
  maybe_fail("vision");
  simulate_latency();
  {
    std::lock_guard lock(mu_);
    const std::string& prompt = messages.back().content;
    for (const auto& rule : vision_rules_) {
      const bool key_ok = rule.key_prefix.empty() || image.key.rfind(rule.key_prefix, 0) == 0;
      const bool prompt_ok =
          rule.prompt_contains.empty() || prompt.find(rule.prompt_contains) != std::string::npos;
      if (key_ok && prompt_ok) return rule.response;
    }
  }
  json canonical = canonical_chat_request(messages, profile);
  canonical["op"] = "vision";
  canonical["image_key"] = image.key;
  const std::uint64_t h = mix(options_.seed, request_hash(canonical));
  return synthesize_vision(image, messages, h);
}

std::vector<std::vector<double>> MockGateway::do_embed(const std::vector<std::string>& texts,
                                                       const ServiceProfile& profile) {
  ProbeGuard probe_guard(probe_for("embed"));
  maybe_fail("embed");
  simulate_latency();
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    {
      std::lock_guard lock(mu_);
      if (auto it = embed_fixtures_.find(text); it != embed_fixtures_.end()) {
        out.push_back(it->second);
        continue;
      }
    }
    // Seeded hash-derived unit vector.
    const int dim = std::max(1, profile.embed_dim);
    std::vector<double> v(static_cast<std::size_t>(dim));
    const std::uint64_t base = mix(options_.seed, fnv1a64("embed\x1f" + text));
    double norm = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double u = unit_interval(mix(base, static_cast<std::uint64_t>(i))) * 2.0 - 1.0;
      v[static_cast<std::size_t>(i)] = u;
      norm += u * u;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) norm = 1.0;
    for (auto& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> MockGateway::do_score_image_text(const ImagePayload& image,
                                                     const std::vector<std::string>& texts,
                                                     const ServiceProfile&) {
  ProbeGuard probe_guard(probe_for("score"));
  maybe_fail("score");
  simulate_latency();
  std::vector<double> out;
  out.reserve(texts.size());
  if (options_.score_mode == MockOptions::ScoreMode::oracle) {
    std::lock_guard lock(mu_);
    const auto it = score_truths_.find(image.key);
    for (const auto& text : texts) {
      const bool hit = it != score_truths_.end() &&
                       it->second.count(casefold(normalize_text(text))) > 0;
      out.push_back(hit ? 1.0 : 0.0);
    }
    return out;
  }
  for (const auto& text : texts) {
    const std::uint64_t h = mix(options_.seed, fnv1a64("score\x1f" + image.key + "\x1f" + text));
    out.push_back(unit_interval(h));
  }
  return out;
}

RleMask MockGateway::do_segment(const ImagePayload& image, const BBoxNorm& bbox,
                                const ServiceProfile&) {
  ProbeGuard probe_guard(probe_for("segment"));
  maybe_fail("segment");
  simulate_latency();
  if (!options_.segment_available) throw GatewayError("segmentation unavailable");
  if (image.bytes.empty()) throw GatewayError("segmentation unavailable");
  const Image img = decode_ppm(image.bytes);
  const RectF r = denormalize(bbox, img.width, img.height);
  return RleMask::from_rect(img.width, img.height, static_cast<int>(std::lround(r.x1)),
                            static_cast<int>(std::lround(r.y1)),
                            static_cast<int>(std::lround(r.x2)),
                            static_cast<int>(std::lround(r.y2)));
}

std::string MockGateway::synthesize_chat(const std::vector<ChatMessage>& messages,
                                         std::uint64_t h) const {
  const std::string system =
      messages.front().role == ChatRole::system ? messages.front().content : "";
  const std::string& last_user = messages.back().content;

  if (starts_with_ci(system, "You are an AI visual assistant")) {
    // Object description task: emit one block per coordinate line.
    const auto names = parse_coordinate_line_names(last_user);
    if (names.empty()) return "no objects found";
    std::ostringstream os;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const std::string alias = first_alias(names[i]);
      const std::string other =
          names.size() > 1 ? first_alias(names[(i + 1) % names.size()]) : "scene edge";
      const std::uint64_t hb = mix(h, fnv1a64(names[i]));
      os << "**[" << names[i] << "]**\n";
      os << "(1) " << alias << ", " << pick(adjective_pool(), hb) << " " << alias << ", " << alias
         << " in the scene\n";
      os << "(2) " << alias << " near the " << other << ", " << alias << " "
         << pick(scene_phrase_pool(), mix(hb, 7)) << "\n";
      if (i + 1 < names.size()) os << "\n";
    }
    return os.str();
  }

  if (starts_with_ci(system, "You are an AI language assistant that can analyze phrases")) {
    // Commonality summarization: intersect profile tokens.
    std::vector<std::vector<std::string>> token_lists;
    std::istringstream in(last_user);
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("##", 0) != 0) continue;
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      std::vector<std::string> tokens;
      for (auto& w : split_ws(line.substr(colon + 1))) {
        std::string t = casefold(w);
        while (!t.empty() && (t.back() == ',' || t.back() == ';' || t.back() == '.')) t.pop_back();
        if (!t.empty() && stopwords().count(t) == 0) tokens.push_back(std::move(t));
      }
      token_lists.push_back(std::move(tokens));
    }
    std::vector<std::string> common;
    if (!token_lists.empty()) {
      for (const auto& tok : token_lists.front()) {
        if (std::find(common.begin(), common.end(), tok) != common.end()) continue;
        bool everywhere = true;
        for (std::size_t i = 1; i < token_lists.size(); ++i) {
          if (std::find(token_lists[i].begin(), token_lists[i].end(), tok) ==
              token_lists[i].end()) {
            everywhere = false;
            break;
          }
        }
        if (everywhere) common.push_back(tok);
      }
    }
    if (token_lists.size() < 2 || common.empty()) {
      return "There are no common properties between the given objects.";
    }
    std::ostringstream os;
    os << "Summary of common properties of given objects:\n## ";
    const std::size_t n = std::min<std::size_t>(common.size(), 4);
    for (std::size_t i = 0; i < n; ++i) os << "objects sharing " << common[i] << "; ";
    return os.str();
  }

  if (starts_with_ci(system, "You are an AI language assistant that can analyze the language")) {
    // Complexity leveling: crude but deterministic word-count heuristic.
    std::string text = last_user;
    const std::string tag = "Grade description:";
    if (const auto pos = text.find(tag); pos != std::string::npos) {
      text = text.substr(pos + tag.size());
    }
    text = normalize_text(text);
    if (!text.empty() && text.back() == '.') text.pop_back();
    const std::size_t words = word_count(text);
    int level = 3;
    if (words <= 1) level = 0;
    else if (words <= 4) level = 1;
    else if (words <= 8) level = 2;
    return "My grading for description " + text +
           ": The level of this description is: level " + std::to_string(level) + ".";
  }

  if (starts_with_ci(system, "I want you to act as a synonymous expression provider")) {
    std::string text = normalize_text(last_user);
    std::string rewritten;
    if (starts_with_ci(text, "the ")) {
      rewritten = text.substr(4) + " in view";
    } else {
      rewritten = "the " + text;
    }
    auto words = split_ws(rewritten);
    if (words.size() > 25) words.resize(25);
    std::string out;
    for (const auto& w : words) {
      if (!out.empty()) out += ' ';
      out += w;
    }
    return out;
  }

  return "mock-chat-" + hex16(h);
}

std::string MockGateway::synthesize_vision(const ImagePayload& image,
                                           const std::vector<ChatMessage>& messages,
                                           std::uint64_t h) const {
  const std::string& prompt = messages.back().content;

  if (prompt.find("including objects:") != std::string::npos) {
    const auto pos = prompt.find("including objects:");
    const std::string list = normalize_text(prompt.substr(pos + std::string("including objects:").size()));
    const auto items = split_trimmed(list, ',');
    std::ostringstream os;
    os << "The image shows";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i == 0) os << " ";
      else if (i + 1 == items.size()) os << " and ";
      else os << ", ";
      os << items[i];
    }
    os << " arranged in one scene.";
    if (!items.empty()) {
      os << " The " << items.front() << " " << pick(scene_phrase_pool(), h) << ", "
         << pick(adjective_pool(), mix(h, 3)) << " against the surroundings.";
    }
    return os.str();
  }

  // Local prompts carry the boxed object in the payload key:
  // "<image_id>#obj:<object_id>:<content>".
  std::string content = "object";
  if (const auto pos = image.key.find("#obj:"); pos != std::string::npos) {
    const std::string tail = image.key.substr(pos + 5);
    const auto colon = tail.find(':');
    if (colon != std::string::npos && colon + 1 < tail.size()) content = tail.substr(colon + 1);
  }

  if (contains_ci(prompt, "What is the object inside")) {
    return "The object inside the red bounding box is a " + content + ".";
  }
  if (contains_ci(prompt, "What are the attributes")) {
    return "It looks " + pick(adjective_pool(), h) + " and " + pick(adjective_pool(), mix(h, 5)) +
           ".";
  }
  if (contains_ci(prompt, "Which objects are around")) {
    return "Several other objects surround the " + content + ".";
  }
  if (contains_ci(prompt, "What is the relationship")) {
    return "The " + content + " is " + pick(scene_phrase_pool(), mix(h, 11)) + ".";
  }
  if (contains_ci(prompt, "Please review the image once again")) {
    return "On review, the previous answers hold.";
  }
  if (contains_ci(prompt, "red box") || contains_ci(prompt, "red bounding box")) {
    return "the " + pick(adjective_pool(), h) + " " + content + " " +
           pick(scene_phrase_pool(), mix(h, 13));
  }
  return "mock-vision-" + hex16(h);
}

}  // namespace indet
