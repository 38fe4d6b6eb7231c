// Acceptance suite. Every criterion runs against the in-repo mock services;
// no external model access is required. One PASS/FAIL line per criterion.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "indet/expression_filter.hpp"
#include "indet/global_pipeline.hpp"
#include "indet/jsonl.hpp"
#include "indet/local_pipeline.hpp"
#include "indet/mock_gateway.hpp"
#include "indet/multi_object.hpp"
#include "indet/orchestrator.hpp"
#include "indet/post_process.hpp"
#include "indet/rng.hpp"
#include "indet/text.hpp"
#include "indet/visual_prompt.hpp"

// doctest REQUIRE-style macros are not used here; the suite is a plain
// binary so each criterion prints exactly one line.
#undef REQUIRE

namespace {

using namespace indet;
namespace fs = std::filesystem;

struct Check {
  std::vector<std::string> failures;
  void expect(bool cond, const std::string& what) {
    if (!cond) failures.push_back(what);
  }
};

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path.string() + ">";
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

Image noise_image(int w, int h, std::uint64_t seed) {
  Image img = Image::solid(w, h, {0, 0, 0});
  std::mt19937_64 rng(seed);
  for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

Expression make_expr(std::string text, std::vector<std::string> ids, ExpressionSource source) {
  Expression e;
  e.text = std::move(text);
  e.target = TargetSet::of(std::move(ids));
  e.source = source;
  return e;
}

ServiceProfile profile(const std::string& name) {
  ServiceProfile p;
  p.name = name;
  p.retry.base_delay_ms = 0;
  return p;
}

const char* kParkingLotReply =
    "**[Fire Truck]**\n"
    "\n"
    "(1) vehicle, emergency vehicle, fire engine, parked outside the fire station, an essential "
    "part of the fire station's resources, essential part of the fire station's resources\n"
    "(2) lined up in a neat row, ready for use, object parked in the row with other fire trucks, "
    "object with ladders and equipment\n"
    "\n"
    "**[Street Lights]**\n"
    "\n"
    "(1) light fixtures, outdoor lighting, two lights visible, providing illumination, source of "
    "illumination\n"
    "(2) objects providing illumination, objects in the parking lot, objects providing a clear "
    "representation of the overall setting, objects providing light for the parking lot\n";

// ---------------------------------------------------------------- criterion 1
void golden_parse(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto blocks = parse_object_blocks(kParkingLotReply);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(elapsed < 1.0, "parse exceeded 1 s");
  c.expect(blocks.size() == 2, "expected 2 blocks, got " + std::to_string(blocks.size()));
  if (blocks.size() != 2) return;

  const std::vector<std::string> truck_self = {
      "vehicle", "emergency vehicle", "fire engine", "parked outside the fire station",
      "an essential part of the fire station's resources"};
  const std::vector<std::string> truck_rel = {
      "lined up in a neat row", "ready for use",
      "object parked in the row with other fire trucks", "object with ladders and equipment"};
  const std::vector<std::string> lights_self = {
      "light fixtures", "outdoor lighting", "two lights visible", "providing illumination",
      "source of illumination"};
  const std::vector<std::string> lights_rel = {
      "objects providing illumination", "objects in the parking lot",
      "objects providing a clear representation of the overall setting",
      "objects providing light for the parking lot"};

  c.expect(blocks[0].names == std::vector<std::string>{"Fire Truck"}, "block 1 heading");
  c.expect(blocks[0].attrs_self.size() == 5, "block 1 expects 5 unique self attributes");
  c.expect(blocks[0].attrs_rel.size() == 4, "block 1 expects 4 relational attributes");
  c.expect(blocks[0].attrs_self == truck_self, "block 1 self phrase list");
  c.expect(blocks[0].attrs_rel == truck_rel, "block 1 relational phrase list");
  c.expect(blocks[1].names == std::vector<std::string>{"Street Lights"}, "block 2 heading");
  c.expect(blocks[1].attrs_self == lights_self, "block 2 self phrase list (5 after dedup)");
  c.expect(blocks[1].attrs_rel == lights_rel, "block 2 relational phrase list (4)");
}

// ---------------------------------------------------------------- criterion 2
void score_algebra(Check& c) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> score(-4.0, 4.0);
  std::uniform_real_distribution<double> alpha(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double s_l = score(rng), s_g = score(rng), a = alpha(rng);
    const auto f = FilterScores::from(s_l, s_g, a);
    const double scale_e = std::max({1.0, std::fabs(f.s_e), std::fabs(s_l - s_g)});
    const double scale_f = std::max({1.0, std::fabs(f.s_f), std::fabs(s_l - a * s_g)});
    if (std::fabs(f.s_e - (s_l - s_g)) > 1e-12 * scale_e) {
      c.expect(false, "s_e deviates beyond 1e-12 relative");
      return;
    }
    if (std::fabs(f.s_f - (s_l - a * s_g)) > 1e-12 * scale_f) {
      c.expect(false, "s_f deviates beyond 1e-12 relative");
      return;
    }
  }
  // Limits exactly.
  c.expect(FilterScores::from(0.8, 0.4, 0.0).s_f == 0.8, "alpha1=0 limit");
  const auto a1 = FilterScores::from(0.8, 0.4, 1.0);
  c.expect(a1.s_f == a1.s_e, "alpha1=1 limit");
  // Monotonicity.
  for (int i = 0; i < 1000; ++i) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double a = 0.2 + 0.8 * u(rng);
    const double s_l = u(rng), s_g = u(rng), d = 0.01 + u(rng);
    c.expect(FilterScores::from(s_l + d, s_g, a).s_f > FilterScores::from(s_l, s_g, a).s_f,
             "s_f not increasing in s_l");
    c.expect(FilterScores::from(s_l, s_g + d, a).s_f < FilterScores::from(s_l, s_g, a).s_f,
             "s_f not decreasing in s_g");
  }
}

// ---------------------------------------------------------------- criterion 3
Image blur_reference(const Image& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::lround(3.0 * sigma)));
  std::vector<double> k1(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k1[static_cast<std::size_t>(i + radius)] =
        std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    sum += k1[static_cast<std::size_t>(i + radius)];
  }
  for (auto& v : k1) v /= sum;
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int j = -radius; j <= radius; ++j) {
        const int sy = std::clamp(y + j, 0, img.height - 1);
        for (int i = -radius; i <= radius; ++i) {
          const int sx = std::clamp(x + i, 0, img.width - 1);
          const double k = k1[static_cast<std::size_t>(j + radius)] *
                           k1[static_cast<std::size_t>(i + radius)];
          const Rgb px = img.at(sx, sy);
          acc[0] += k * px.r;
          acc[1] += k * px.g;
          acc[2] += k * px.b;
        }
      }
      out.set(x, y,
              {static_cast<std::uint8_t>(std::clamp<long>(std::lround(acc[0]), 0, 255)),
               static_cast<std::uint8_t>(std::clamp<long>(std::lround(acc[1]), 0, 255)),
               static_cast<std::uint8_t>(std::clamp<long>(std::lround(acc[2]), 0, 255))});
    }
  }
  return out;
}

void visual_prompt_partition(Check& c) {
  std::mt19937_64 rng(33);
  const auto spec = VisualPromptSpec::default_composite();
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 32 + static_cast<int>(rng() % 64);
    const int h = 32 + static_cast<int>(rng() % 64);
    const auto img = noise_image(w, h, 5000 + static_cast<std::uint64_t>(trial));
    // Pixel-aligned boxes at least 8 px on a side.
    const int bx1 = static_cast<int>(rng() % (w / 3));
    const int by1 = static_cast<int>(rng() % (h / 3));
    const int bx2 = bx1 + 8 + static_cast<int>(rng() % (w - bx1 - 8));
    const int by2 = by1 + 8 + static_cast<int>(rng() % (h - by1 - 8));
    const BBoxNorm bbox{static_cast<double>(bx1) / w, static_cast<double>(by1) / h,
                        static_cast<double>(bx2) / w, static_cast<double>(by2) / h};
    const auto out = render_visual_prompt(img, bbox, nullptr, spec);
    const auto blurred = blur_reference(img, blur_sigma(w, h));
    const RectF rect = denormalize(bbox, w, h);
    const double stroke = default_stroke_px(w, h);

    // Ellipse geometry for the analytic comparison.
    const double cx0 = (rect.x1 + rect.x2) / 2.0, cy0 = (rect.y1 + rect.y2) / 2.0;
    const double a = (rect.x2 - rect.x1) / 2.0, b = (rect.y2 - rect.y1) / 2.0;
    auto curve_distance = [&](double px, double py) {
      double best = 1e18;
      for (int s = 0; s < 1024; ++s) {
        const double t = 2.0 * M_PI * s / 1024.0;
        const double dx = px - (cx0 + a * std::cos(t));
        const double dy = py - (cy0 + b * std::sin(t));
        best = std::min(best, dx * dx + dy * dy);
      }
      return std::sqrt(best);
    };

    int checked = 0;
    for (int y = 0; y < h && c.failures.size() < 3; ++y) {
      for (int x = 0; x < w; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        if (ellipse_stroke_covers(rect, stroke, px, py)) {
          if (!(out.at(x, y) == kRed)) {
            c.expect(false, "stroke pixel not red at trial " + std::to_string(trial));
          }
          if (curve_distance(px, py) > stroke / 2.0 + 1.0) {
            c.expect(false, "red pixel farther than stroke/2 + 1 px from the analytic ellipse");
          }
          continue;
        }
        const bool inside = px >= rect.x1 + 1 && px <= rect.x2 - 1 && py >= rect.y1 + 1 &&
                            py <= rect.y2 - 1;
        const bool outside = px < rect.x1 - 1 || px > rect.x2 + 1 || py < rect.y1 - 1 ||
                             py > rect.y2 + 1;
        if (inside && !(out.at(x, y) == img.at(x, y))) {
          c.expect(false, "interior pixel differs from the original at trial " +
                              std::to_string(trial));
        }
        if (outside && !(out.at(x, y) == blurred.at(x, y))) {
          c.expect(false, "exterior pixel differs from the independent blur at trial " +
                              std::to_string(trial));
        }
        ++checked;
      }
    }
    c.expect(checked > 0, "no pixels checked");
    // Every analytic curve point lands on a red pixel.
    for (int s = 0; s < 256; ++s) {
      const double t = 2.0 * M_PI * s / 256.0;
      const int px = static_cast<int>(cx0 + a * std::cos(t));
      const int py = static_cast<int>(cy0 + b * std::sin(t));
      if (px < 0 || px >= w || py < 0 || py >= h) continue;
      if (!(out.at(px, py) == kRed)) {
        c.expect(false, "analytic ellipse point not covered by the stroke");
        break;
      }
    }
    if (!c.failures.empty()) return;
  }
}

// ---------------------------------------------------------------- criterion 4
double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::vector<int> dbscan_reference(const std::vector<std::vector<double>>& points, double eps,
                                  int min_pts) {
  const std::size_t n = points.size();
  std::vector<int> labels(n, kDbscanNoise);
  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> ball(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (sq_dist(points[i], points[j]) <= eps2) ball[i].push_back(j);
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = ball[i].size() >= static_cast<std::size_t>(min_pts);
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || comp[i] != -1) continue;
    const int cidx = ncomp++;
    std::vector<std::size_t> stack{i};
    comp[i] = cidx;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      for (std::size_t q : ball[p]) {
        if (core[q] && comp[q] == -1) {
          comp[q] = cidx;
          stack.push_back(q);
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      labels[i] = comp[i];
      continue;
    }
    int best = -1;
    for (std::size_t q : ball[i]) {
      if (core[q] && (best == -1 || comp[q] < best)) best = comp[q];
    }
    labels[i] = best;
  }
  return labels;
}

bool labels_match(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> fwd, bwd;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == kDbscanNoise) != (b[i] == kDbscanNoise)) return false;
    if (a[i] == kDbscanNoise) continue;
    if (fwd.count(a[i]) && fwd[a[i]] != b[i]) return false;
    if (bwd.count(b[i]) && bwd[b[i]] != a[i]) return false;
    fwd[a[i]] = b[i];
    bwd[b[i]] = a[i];
  }
  return true;
}

void dbscan_oracle(Check& c) {
  const std::vector<std::vector<double>> triple = {{0, 0}, {0, 1}, {10, 10}};
  const auto labels = dbscan(triple, 1.5, 2);
  c.expect(labels[0] == labels[1] && labels[0] != kDbscanNoise,
           "(0,0)/(0,1) must share one cluster");
  c.expect(labels[2] == kDbscanNoise, "(10,10) must be noise");

  std::mt19937_64 rng(99);
  for (int instance = 0; instance < 200; ++instance) {
    const std::size_t n = 1 + rng() % 50;
    const std::size_t dim = 1 + rng() % 8;
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    std::vector<std::vector<double>> points(n, std::vector<double>(dim));
    for (auto& p : points) {
      for (auto& x : p) x = coord(rng);
    }
    std::uniform_real_distribution<double> epsd(0.25, 3.0);
    const double eps = epsd(rng);
    const int min_pts = 1 + static_cast<int>(rng() % 5);
    if (!labels_match(dbscan(points, eps, min_pts), dbscan_reference(points, eps, min_pts))) {
      c.expect(false, "instance " + std::to_string(instance) + " diverges from brute force");
      return;
    }
  }
}

// ---------------------------------------------------------------- criterion 5
void dynamic_threshold(Check& c) {
  ImageRecord record;
  record.image_id = "oracle_img";
  record.width_px = record.height_px = 64;
  ObjectEntry girl;
  girl.object_id = "g";
  girl.category = "girl";
  girl.seed_expressions = {"girl sitting on bed"};
  girl.bbox = {0.1, 0.1, 0.5, 0.9};
  ObjectEntry lamp;
  lamp.object_id = "l";
  lamp.category = "lamp";
  lamp.bbox = {0.6, 0.2, 0.9, 0.7};
  record.objects = {girl, lamp};
  const auto pixels = noise_image(64, 64, 64);

  MockOptions options;
  options.score_mode = MockOptions::ScoreMode::oracle;
  MockGateway gateway(options);
  const auto spec = VisualPromptSpec::default_composite();
  gateway.add_score_truth(prompted_image_key(record.image_id, girl.bbox, spec),
                          {"girl sitting on bed", "girl with toy"});
  gateway.add_score_truth(prompted_image_key(record.image_id, lamp.bbox, spec),
                          {"lamp", "the small lamp"});

  const std::vector<Expression> candidates = {
      make_expr("girl with toy", {"g"}, ExpressionSource::global),
      make_expr("a fabricated unicorn", {"g"}, ExpressionSource::global),
      make_expr("the small lamp", {"l"}, ExpressionSource::local),  // boundary: s_f == reference
      make_expr("whole image description", {"l"}, ExpressionSource::local),
  };
  PipelineConfig config;
  const auto outcome = filter_expressions(candidates, record, pixels, gateway, config,
                                          profile("score"), profile("segment"));
  auto kept_has = [&](const std::string& text) {
    return std::any_of(outcome.kept.begin(), outcome.kept.end(),
                       [&](const Expression& e) { return e.text == text; });
  };
  c.expect(kept_has("girl with toy"), "ground-truth candidate must be kept");
  c.expect(kept_has("the small lamp"), "boundary tie (s_f == reference) must be kept");
  c.expect(outcome.dropped.size() == 2, "both fabricated candidates must be dropped");
  for (const auto& e : outcome.dropped) {
    c.expect(e.text == "a fabricated unicorn" || e.text == "whole image description",
             "unexpected drop: " + e.text);
  }
  c.expect(outcome.kept.size() + outcome.dropped.size() == candidates.size(),
           "kept and dropped must partition the candidates");
}

// ---------------------------------------------------------------- criterion 6
void retrieval_harness(Check& c) {
  const auto spec = VisualPromptSpec::default_composite();
  // Perfect oracle: 100.0.
  {
    MockOptions options;
    options.score_mode = MockOptions::ScoreMode::oracle;
    MockGateway gateway(options);
    std::vector<RetrievalBatch> batches;
    for (int b = 0; b < 10; ++b) {
      RetrievalBatch batch;
      batch.image = noise_image(16, 16, 7000 + b);
      batch.image_key = "perfect" + std::to_string(b);
      batch.bbox = {0.25, 0.25, 0.75, 0.75};
      for (int t = 0; t < 12; ++t) batch.texts.push_back("p" + std::to_string(b * 12 + t));
      batch.correct = {1, 4};
      gateway.add_score_truth(prompted_image_key(batch.image_key, batch.bbox, spec),
                              {batch.texts[1], batch.texts[4]});
      batches.push_back(std::move(batch));
    }
    const double ratio = retrieval_ratio(batches, spec, 2, gateway, profile("score"));
    c.expect(ratio == 100.0, "perfect oracle expected 100.0, got " + std::to_string(ratio));
  }
  // Seeded random scorer, N=20, k=2, 10000 batches: about k/N = 10%.
  {
    MockGateway gateway;  // hash scores
    std::vector<RetrievalBatch> batches;
    const auto shared = noise_image(8, 8, 11);
    for (int b = 0; b < 10000; ++b) {
      RetrievalBatch batch;
      batch.image = shared;
      batch.image_key = "mc" + std::to_string(b);
      batch.bbox = {0.25, 0.25, 0.75, 0.75};
      for (int t = 0; t < 20; ++t) {
        batch.texts.push_back("t" + std::to_string(b) + "-" + std::to_string(t));
      }
      batch.correct = {0, 1};
      batches.push_back(std::move(batch));
    }
    const double ratio = retrieval_ratio(batches, spec, 2, gateway, profile("score"));
    c.expect(std::fabs(ratio - 10.0) <= 2.0,
             "random scorer expected 10% +/- 2, got " + std::to_string(ratio));
  }
}

// ---------------------------------------------------------------- criterion 7
void grouping(Check& c, const fs::path& run_dir) {
  MockGateway gateway;
  gateway.add_chat_rule("Grade description: people who are sitting under an umbrella.",
                        "My grading for description people who are sitting under an umbrella: "
                        "This phrase is referring to the object of people, and gives simple "
                        "object action of sitting and object relationship with the umbrella. "
                        "The level of this description is: level 2.");
  const auto e =
      make_expr("people who are sitting under an umbrella", {"p"}, ExpressionSource::global);
  const auto outcome = assign_group(e, gateway, profile("chat"), PromptLibrary::builtin());
  c.expect(outcome.group == InstructionGroup::G3, "level 2 must map to G3");
  c.expect(!outcome.defaulted, "the modeled reply must parse");

  int parsed = 0;
  for (int i = 0; i < 100; ++i) {
    const int level = i % 4;
    std::string response;
    switch (i % 5) {
      case 0:
        response = "The level of this description is: level " + std::to_string(level) + ".";
        break;
      case 1:
        response = "My grading for description x: object and relation noted. The level of this "
                   "description is: level " + std::to_string(level);
        break;
      case 2: response = "Level " + std::to_string(level) + "."; break;
      case 3:
        response = "After consideration, I grade it level " + std::to_string(level) + " overall.";
        break;
      default: response = "level " + std::to_string(level); break;
    }
    const auto got = parse_level(response);
    if (got && *got == level) ++parsed;
  }
  c.expect(parsed == 100, "expected 100 parsed fixture replies, got " + std::to_string(parsed));

  // Every emitted record obeys the group/cardinality rule.
  std::size_t single = 0, multi = 0;
  for (const char* split : {"indet_train.jsonl", "indet_val.jsonl", "indet_test.jsonl"}) {
    for (const auto& j : read_jsonl(run_dir / split)) {
      const auto r = j.get<InDetRecord>();
      if (r.target.size() == 1) {
        ++single;
        c.expect(!is_multi_object_group(r.group),
                 "single-target record landed in G5/G6: " + r.instruction);
      } else {
        ++multi;
        c.expect(is_multi_object_group(r.group),
                 "multi-target record landed in G1..G4: " + r.instruction);
      }
    }
  }
  c.expect(single > 0, "the run must emit single-target records");
  c.expect(multi > 0, "the run must emit multi-target records");
}

// ------------------------------------------------------ fixture for 8 and on
struct E2e {
  fs::path src;
  fs::path coco, refs, captions;
};

E2e write_fixture() {
  using nlohmann::json;
  E2e f;
  f.src = fresh_dir("indet_accept_src");
  write_ppm(noise_image(64, 48, 1001), f.src / "imgA.ppm");
  write_ppm(noise_image(48, 64, 1002), f.src / "imgB.ppm");
  write_ppm(noise_image(56, 56, 1003), f.src / "imgC.ppm");
  const json coco{
      {"images",
       {{{"id", "imgA"}, {"width", 64}, {"height", 48}, {"file_name", "imgA.ppm"}},
        {{"id", "imgB"}, {"width", 48}, {"height", 64}, {"file_name", "imgB.ppm"}},
        {{"id", "imgC"}, {"width", 56}, {"height", 56}, {"file_name", "imgC.ppm"}}}},
      {"annotations",
       {{{"id", 1}, {"image_id", "imgA"}, {"category_id", 1}, {"bbox", {6, 5, 26, 38}}},
        {{"id", 2}, {"image_id", "imgA"}, {"category_id", 2}, {"bbox", {38, 10, 20, 25}}},
        {{"id", 3}, {"image_id", "imgB"}, {"category_id", 3}, {"bbox", {5, 8, 18, 40}}},
        {{"id", 4}, {"image_id", "imgB"}, {"category_id", 3}, {"bbox", {26, 10, 16, 42}}},
        {{"id", 5}, {"image_id", "imgB"}, {"category_id", 4}, {"bbox", {10, 48, 30, 12}}},
        {{"id", 6}, {"image_id", "imgC"}, {"category_id", 5}, {"bbox", {4, 18, 22, 20}}},
        {{"id", 7}, {"image_id", "imgC"}, {"category_id", 5}, {"bbox", {30, 20, 22, 18}}}}},
      {"categories",
       {{{"id", 1}, {"name", "girl"}},
        {{"id", 2}, {"name", "lamp"}},
        {{"id", 3}, {"name", "person"}},
        {{"id", 4}, {"name", "dog"}},
        {{"id", 5}, {"name", "car"}}}}};
  f.coco = f.src / "coco.json";
  std::ofstream(f.coco, std::ios::trunc) << coco.dump(2);
  f.refs = f.src / "refs.jsonl";
  {
    std::ofstream out(f.refs, std::ios::trunc);
    out << json{{"image_id", "imgA"},
                {"object_id", 1},
                {"sentences", {"girl sitting on bed", "girl with toy"}}}
               .dump()
        << "\n";
    out << json{{"image_id", "imgC"}, {"object_id", 6}, {"sentences", {"the left car"}}}.dump()
        << "\n";
  }
  f.captions = f.src / "captions.jsonl";
  {
    std::ofstream out(f.captions, std::ios::trunc);
    out << json{{"image_id", "imgB"},
                {"captions",
                 {"Two people walk a dog along the street.",
                  "A dog leads two persons on a morning walk."}}}
               .dump()
        << "\n";
  }
  return f;
}

PipelineConfig fixture_config(const fs::path& out, const E2e& f) {
  PipelineConfig cfg;
  cfg.mock = true;
  cfg.rng_seed = 7;
  cfg.out_dir = out.string();
  cfg.images_dir = f.src.string();
  cfg.splits.train = cfg.splits.val = cfg.splits.test = 1.0 / 3.0;
  return cfg;
}

const char* kFinalArtifacts[] = {"indet_train.jsonl", "indet_val.jsonl", "indet_test.jsonl",
                                 "stats.json", "filter_report.jsonl"};

// ---------------------------------------------------------------- criterion 8
void end_to_end_determinism(Check& c, const E2e& f, fs::path& out_dir) {
  const RunInputs inputs{f.coco, f.refs, f.captions};
  const auto out1 = fresh_dir("indet_accept_run1");
  const auto out2 = fresh_dir("indet_accept_run2");
  for (const auto& out : {out1, out2}) {
    auto cfg = fixture_config(out, f);
    Orchestrator orch(cfg, make_gateway(cfg), PromptLibrary::builtin());
    orch.run(all_stages(), inputs);
  }
  for (const char* name : kFinalArtifacts) {
    c.expect(read_bytes(out1 / name) == read_bytes(out2 / name),
             std::string(name) + " differs between identical runs");
  }

  // Resume after a simulated kill mid-filter.
  const auto partial = fresh_dir("indet_accept_resume");
  auto cfg = fixture_config(partial, f);
  {
    Orchestrator orch(cfg, make_gateway(cfg), PromptLibrary::builtin());
    orch.run({Stage::ingest, Stage::global, Stage::local, Stage::filter}, inputs);
    const auto filter_file = partial / stage_file(Stage::filter);
    const auto lines = read_jsonl(filter_file);
    c.expect(lines.size() == 3, "expected 3 filter checkpoint lines");
    write_jsonl(filter_file, {lines.front()});
    fs::remove(partial / "filter_report.jsonl");
  }
  auto resumed_gateway = std::make_shared<MockGateway>([] {
    MockOptions o;
    o.seed = 7;
    return o;
  }());
  Orchestrator orch(cfg, resumed_gateway, PromptLibrary::builtin());
  orch.run({Stage::filter}, inputs, true);
  const auto resumed_scores = resumed_gateway->stats().count("score")
                                  ? resumed_gateway->stats().at("score").count
                                  : 0;
  orch.run({Stage::multiobj, Stage::postprocess, Stage::stats}, inputs);
  for (const char* name : kFinalArtifacts) {
    c.expect(read_bytes(out1 / name) == read_bytes(partial / name),
             std::string(name) + " differs after resume");
  }
  // One of the three images was already done; its candidates were not
  // re-scored on resume.
  auto probe_gateway = std::make_shared<MockGateway>([] {
    MockOptions o;
    o.seed = 7;
    return o;
  }());
  const auto probe_dir = fresh_dir("indet_accept_probe");
  auto probe_cfg = fixture_config(probe_dir, f);
  Orchestrator probe(probe_cfg, probe_gateway, PromptLibrary::builtin());
  probe.run({Stage::ingest, Stage::global, Stage::local, Stage::filter}, inputs);
  c.expect(resumed_scores < probe_gateway->stats().at("score").count,
           "resume re-scored already-completed images");
  out_dir = out1;
}

// ---------------------------------------------------------------- criterion 9
void stats_correctness(Check& c, const fs::path& run_dir) {
  std::vector<InDetRecord> records;
  for (const char* split : {"indet_train.jsonl", "indet_val.jsonl", "indet_test.jsonl"}) {
    for (const auto& j : read_jsonl(run_dir / split)) records.push_back(j.get<InDetRecord>());
  }
  c.expect(!records.empty(), "no emitted records to analyze");
  MockGateway gateway;
  const auto stats = compute_stats(records, gateway, profile("embed"));
  std::int64_t mass = 0;
  for (const auto& [words, count] : stats.word_histogram) mass += count;
  c.expect(mass == stats.instructions, "histogram mass must equal the instruction count");
  double ratio_sum = 0;
  for (const auto& [g, r] : stats.group_ratios) ratio_sum += r;
  c.expect(std::fabs(ratio_sum - 1.0) <= 1e-9, "group ratios must sum to 1");

  // Synthetic diversity fixtures.
  MockGateway fixture_gateway;
  fixture_gateway.add_embed_fixture("alpha", {1.0, 0.0});
  fixture_gateway.add_embed_fixture("beta", {0.0, 1.0});
  auto mk = [](std::string text) {
    InDetRecord r;
    r.image_id = "s";
    r.target = TargetSet::of({"1"});
    r.bboxes.resize(1);
    r.instruction = std::move(text);
    r.group = InstructionGroup::G1;
    r.source = ExpressionSource::seed;
    return r;
  };
  const std::vector<InDetRecord> same = {mk("alpha"), mk("alpha")};
  const std::vector<InDetRecord> ortho = {mk("alpha"), mk("beta")};
  c.expect(std::fabs(compute_stats(same, fixture_gateway, profile("embed")).mean_pairwise_cosine -
                     1.0) < 1e-12,
           "identical instructions must give diversity 1.0");
  c.expect(std::fabs(compute_stats(ortho, fixture_gateway, profile("embed")).mean_pairwise_cosine) <
               1e-12,
           "orthogonal embeddings must give diversity 0.0");
}

// --------------------------------------------------------------- criterion 10
void concurrency_cap(Check& c, const fs::path& run_dir) {
  MockOptions options;
  options.latency_ms = 2;
  MockGateway gateway(options);
  ServiceProfile p = profile("chat");
  p.max_in_flight = 4;
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int i = 0; i < 100; ++i) {
    threads.emplace_back([&gateway, &p, &failures, i] {
      try {
        (void)gateway.chat({{ChatRole::user, "queued request " + std::to_string(i), {}}}, p);
      } catch (...) {
        ++failures;
      }
    });
  }
  for (auto& t : threads) t.join();
  c.expect(failures == 0, "requests failed under load");
  c.expect(gateway.stats().at("chat").count == 100, "expected 100 completed requests");
  c.expect(gateway.peak_concurrent("chat") <= 4,
           "observed " + std::to_string(gateway.peak_concurrent("chat")) +
               " concurrent requests, cap is 4");
  c.expect(gateway.peak_concurrent("chat") >= 2, "queue never ran concurrently");

  // Throughput report fields populated by the pipeline run.
  const auto report = nlohmann::json::parse(read_bytes(run_dir / "run_report.json"));
  bool saw_requests = false;
  for (const auto& stage : report.at("stages")) {
    if (!stage.at("requests").empty()) saw_requests = true;
    c.expect(stage.contains("s_per_image") && stage.contains("s_per_instruction"),
             "stage accounting fields missing");
  }
  c.expect(saw_requests, "no per-service request stats recorded");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<void(Check&)> fn;
  };

  const E2e fixture = write_fixture();
  fs::path run_dir;

  std::vector<Criterion> criteria = {
      {1, "golden parse of the block-formatted reply", golden_parse},
      {2, "final-score algebra and monotonicity", score_algebra},
      {3, "visual prompting pixel partition", visual_prompt_partition},
      {4, "dbscan matches the brute-force reference", dbscan_oracle},
      {5, "dynamic-threshold filtering with the oracle scorer", dynamic_threshold},
      {6, "retrieval-ratio harness", retrieval_harness},
      {8, "end-to-end determinism and resume",
       [&](Check& c) { end_to_end_determinism(c, fixture, run_dir); }},
      {7, "instruction grouping", [&](Check& c) { grouping(c, run_dir); }},
      {9, "dataset statistics correctness", [&](Check& c) { stats_correctness(c, run_dir); }},
      {10, "gateway concurrency cap and throughput accounting",
       [&](Check& c) { concurrency_cap(c, run_dir); }},
  };
  // Criterion 8 runs before 7/9/10 to produce the shared pipeline outputs;
  // report in numeric order.
  std::vector<std::pair<int, std::string>> results;
  int failed = 0;
  for (auto& criterion : criteria) {
    Check check;
    try {
      criterion.fn(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    std::ostringstream line;
    if (check.failures.empty()) {
      line << "[PASS] criterion " << criterion.id << ": " << criterion.title;
    } else {
      ++failed;
      line << "[FAIL] criterion " << criterion.id << ": " << criterion.title;
      for (const auto& f : check.failures) line << "\n       - " << f;
    }
    results.emplace_back(criterion.id, line.str());
  }
  std::sort(results.begin(), results.end());
  for (const auto& [id, line] : results) std::printf("%s\n", line.c_str());
  std::printf(
      "[NOTE] reference points documented, not desk-reproducible: retrieval 58.29/50.99 "
      "(needs the real scorer and corpus); dataset scale 3.6M instructions, 6.2 mean words, "
      "63k vocabulary.\n");
  if (failed) {
    std::printf("%d criterion(s) failed\n", failed);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
