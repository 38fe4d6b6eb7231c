#include "doctest.h"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "indet/image.hpp"
#include "indet/mock_gateway.hpp"

#include "helpers.hpp"

using namespace indet;

namespace {

ServiceProfile fast_profile(const std::string& name, int max_in_flight = 4) {
  ServiceProfile p;
  p.name = name;
  p.model = "test-model";
  p.max_in_flight = max_in_flight;
  p.retry.base_delay_ms = 0;  // keep retry loops instant under test
  return p;
}

std::vector<ChatMessage> simple_chat(const std::string& text) {
  return {{ChatRole::user, text, {}}};
}

}  // namespace

TEST_CASE("message invariants") {
  CHECK(message_violations({{ChatRole::user, "hi", {}}}).empty());
  CHECK(message_violations({{ChatRole::system, "s", {}},
                            {ChatRole::user, "a", {}},
                            {ChatRole::assistant, "b", {}},
                            {ChatRole::user, "c", {}}})
            .empty());
  // system not first
  CHECK(!message_violations({{ChatRole::user, "a", {}}, {ChatRole::system, "s", {}}}).empty());
  // two user turns in a row
  CHECK(!message_violations({{ChatRole::user, "a", {}}, {ChatRole::user, "b", {}}}).empty());
  // must end with a user turn
  CHECK(!message_violations({{ChatRole::user, "a", {}}, {ChatRole::assistant, "b", {}}}).empty());
}

TEST_CASE("mock determinism: identical (seed, request) gives identical responses") {
  MockOptions options;
  options.seed = 123;
  MockGateway a(options), b(options);
  const auto profile = fast_profile("chat");
  const auto msgs = simple_chat("describe the scene");
  CHECK(a.chat(msgs, profile) == b.chat(msgs, profile));
  CHECK(a.chat(msgs, profile) == a.chat(msgs, profile));

  MockOptions other;
  other.seed = 124;
  MockGateway c(other);
  CHECK(a.chat(msgs, profile) != c.chat(msgs, profile));
}

TEST_CASE("exact fixtures win over synthesis") {
  MockGateway mock;
  const auto msgs = simple_chat("ping");
  mock.add_chat_fixture(msgs, "pong");
  CHECK(mock.chat(msgs, fast_profile("chat")) == "pong");
}

TEST_CASE("two transient failures then success within three attempts") {
  MockGateway mock;
  mock.set_transient_failures("chat", 2);
  const auto profile = fast_profile("chat");
  CHECK_NOTHROW(mock.chat(simple_chat("retry me"), profile));
  const auto stats = mock.stats();
  CHECK(stats.at("chat").count == 1);
  CHECK(stats.at("chat").retries == 2);  // attempt count 3
}

TEST_CASE("transient failures beyond the retry budget fault with attempt count") {
  MockGateway mock;
  mock.set_transient_failures("chat", 5);
  try {
    mock.chat(simple_chat("never"), fast_profile("chat"));
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.attempts == 3);
    CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
  }
}

TEST_CASE("empty completion faults") {
  MockGateway mock;
  mock.add_chat_rule("blankme", "   ");
  CHECK_THROWS_WITH_AS(mock.chat(simple_chat("blankme"), fast_profile("chat")),
                       "empty response", GatewayError);
}

TEST_CASE("oversized payload is rejected before transmission") {
  MockGateway mock;
  auto profile = fast_profile("vision");
  profile.max_payload_bytes = 16;
  ImagePayload image;
  image.key = "big";
  image.bytes.resize(64);
  try {
    mock.vision_chat(image, simple_chat("Describe the objects in the red box."), profile);
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(std::string(e.what()).find("payload too large") != std::string::npos);
  }
  CHECK(mock.stats().count("vision") == 0);  // nothing was attempted
}

TEST_CASE("embed: identical texts give identical unit vectors; empty input is empty") {
  MockGateway mock;
  const auto profile = fast_profile("embed");
  const auto vectors = mock.embed({"a", "a"}, profile);
  REQUIRE(vectors.size() == 2);
  CHECK(vectors[0] == vectors[1]);
  double norm = 0;
  for (double v : vectors[0]) norm += v * v;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0));
  CHECK(mock.embed({}, profile).empty());
}

TEST_CASE("embed dimension mismatch within a batch faults") {
  MockGateway mock;
  mock.add_embed_fixture("short", {1.0, 0.0});
  CHECK_THROWS_AS(mock.embed({"short", "other"}, fast_profile("embed")), GatewayError);
}

TEST_CASE("score_image_text is deterministic and supports the oracle mode") {
  MockGateway hash_mock;
  ImagePayload image;
  image.key = "img#vp:1";
  const auto profile = fast_profile("score");
  const auto s1 = hash_mock.score_image_text(image, {"a dog"}, profile);
  const auto s2 = hash_mock.score_image_text(image, {"a dog"}, profile);
  CHECK(s1 == s2);

  MockOptions options;
  options.score_mode = MockOptions::ScoreMode::oracle;
  MockGateway oracle(options);
  oracle.add_score_truth("img#vp:1", {"the Right Dog"});
  const auto scores = oracle.score_image_text(image, {"the right dog", "a fake cat"}, profile);
  CHECK(scores[0] == 1.0);
  CHECK(scores[1] == 0.0);
}

TEST_CASE("segment returns the bbox rectangle and faults when unavailable") {
  MockGateway mock;
  const auto img = testutil::noise_image(20, 10, 5);
  ImagePayload payload;
  payload.key = "img";
  payload.bytes = encode_ppm(img);
  const BBoxNorm bbox{0.25, 0.2, 0.75, 0.8};
  const auto mask = mock.segment(payload, bbox, fast_profile("segment"));
  CHECK(mask.width == 20);
  CHECK(mask.height == 10);
  CHECK(mask.total() == (15 - 5) * (8 - 2));

  const auto full = mock.segment(payload, {0.0, 0.0, 1.0, 1.0}, fast_profile("segment"));
  CHECK(full.total() == 20 * 10);

  MockOptions options;
  options.segment_available = false;
  MockGateway down(options);
  CHECK_THROWS_WITH_AS(down.segment(payload, bbox, fast_profile("segment")),
                       "segmentation unavailable", GatewayError);
}

TEST_CASE("in-flight requests never exceed max_in_flight") {
  MockOptions options;
  options.latency_ms = 2;
  MockGateway mock(options);
  const auto profile = fast_profile("chat", 4);
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int i = 0; i < 100; ++i) {
    threads.emplace_back([&mock, &profile, &failures, i] {
      try {
        (void)mock.chat(simple_chat("request " + std::to_string(i)), profile);
      } catch (...) {
        ++failures;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(failures == 0);
  const auto stats = mock.stats();
  CHECK(stats.at("chat").count == 100);
  // The mock's own probe, independent of the limiter bookkeeping.
  CHECK(mock.peak_concurrent("chat") <= 4);
  CHECK(mock.peak_concurrent("chat") >= 2);  // the pool actually ran concurrently
}
