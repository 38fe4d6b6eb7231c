#include "indet/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "indet/expression_filter.hpp"
#include "indet/global_pipeline.hpp"
#include "indet/http_gateway.hpp"
#include "indet/image.hpp"
#include "indet/ingestion.hpp"
#include "indet/jsonl.hpp"
#include "indet/local_pipeline.hpp"
#include "indet/mock_gateway.hpp"
#include "indet/multi_object.hpp"
#include "indet/post_process.hpp"
#include "indet/rng.hpp"
#include "indet/text.hpp"

namespace indet {

using nlohmann::json;

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::global: return "global";
    case Stage::local: return "local";
    case Stage::filter: return "filter";
    case Stage::multiobj: return "multiobj";
    case Stage::postprocess: return "postprocess";
    case Stage::stats: return "stats";
  }
  return "ingest";
}

Stage stage_from_string(std::string_view name) {
  for (Stage s : all_stages()) {
    if (stage_name(s) == name) return s;
  }
  throw PipelineError("unknown stage: " + std::string(name));
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {Stage::ingest,   Stage::global,      Stage::local,
                                            Stage::filter,   Stage::multiobj,
                                            Stage::postprocess, Stage::stats};
  return stages;
}

std::string stage_file(Stage stage) {
  switch (stage) {
    case Stage::ingest: return "01_ingest.jsonl";
    case Stage::global: return "02_global.jsonl";
    case Stage::local: return "03_local.jsonl";
    case Stage::filter: return "04_filter.jsonl";
    case Stage::multiobj: return "05_multiobj.jsonl";
    case Stage::postprocess: return "06_postprocess.jsonl";
    case Stage::stats: return "stats.json";
  }
  return "";
}

void to_json(json& j, const StageItem& item) {
  j = json{{"image_id", item.record.image_id},
           {"record", item.record},
           {"expressions", item.expressions},
           {"extra", item.extra}};
}

void from_json(const json& j, StageItem& item) {
  j.at("record").get_to(item.record);
  j.at("expressions").get_to(item.expressions);
  item.extra = j.value("extra", json::object());
}

json RunReport::to_json() const {
  json stages_j = json::array();
  for (const auto& s : stages) {
    json requests = json::object();
    for (const auto& [name, st] : s.requests) {
      const double mean = st.count ? st.total_s / static_cast<double>(st.count) : 0.0;
      requests[name] = json{{"count", st.count},
                            {"retries", st.retries},
                            {"total_s", st.total_s},
                            {"mean_s", mean},
                            {"max_in_flight_seen", st.max_in_flight_seen}};
    }
    const double per_image = s.items_in ? s.wall_s / s.items_in : 0.0;
    const std::int64_t new_exprs = std::max<std::int64_t>(0, s.expressions_out - s.expressions_in);
    const double per_instr = new_exprs ? s.wall_s / static_cast<double>(new_exprs) : 0.0;
    char img_buf[64], instr_buf[64];
    std::snprintf(img_buf, sizeof(img_buf), "%.2f s/image", per_image);
    std::snprintf(instr_buf, sizeof(instr_buf), "%.2f s/instr.", per_instr);
    stages_j.push_back(json{{"stage", s.name},
                            {"items_in", s.items_in},
                            {"items_out", s.items_out},
                            {"expressions_in", s.expressions_in},
                            {"expressions_out", s.expressions_out},
                            {"drops", s.drops},
                            {"wall_s", s.wall_s},
                            {"s_per_image", per_image},
                            {"s_per_instruction", per_instr},
                            {"accounting", json{{"image", img_buf}, {"instruction", instr_buf}}},
                            {"requests", requests}});
  }
  return json{{"stages", stages_j}, {"wall_s", wall_s}};
}

std::shared_ptr<Gateway> make_gateway(const PipelineConfig& config) {
  if (config.mock) {
    MockOptions options;
    options.seed = config.rng_seed;
    auto mock = std::make_shared<MockGateway>(options);
    if (!config.fixtures_path.empty()) mock->load_fixtures(config.fixtures_path);
    return mock;
  }
  return std::make_shared<HttpGateway>(config.endpoints.api_key);
}

Orchestrator::Orchestrator(PipelineConfig config, std::shared_ptr<Gateway> gateway,
                           PromptLibrary prompts)
    : config_(std::move(config)), gateway_(std::move(gateway)), prompts_(std::move(prompts)) {}

namespace {

ServiceProfile profile_for(const PipelineConfig& cfg, const std::string& name,
                           const std::string& endpoint) {
  ServiceProfile p;
  p.name = name;
  p.endpoint = endpoint;
  p.model = name + "-model";
  p.temperature = cfg.temperature;
  p.max_in_flight = cfg.max_in_flight;
  p.embed_dim = cfg.embed_dim;
  return p;
}

}  // namespace

ServiceProfile Orchestrator::chat_profile() const {
  return profile_for(config_, "chat", config_.endpoints.chat);
}
ServiceProfile Orchestrator::vision_profile() const {
  return profile_for(config_, "vision", config_.endpoints.vision);
}
ServiceProfile Orchestrator::embed_profile() const {
  return profile_for(config_, "embed", config_.endpoints.embed);
}
ServiceProfile Orchestrator::score_profile() const {
  return profile_for(config_, "score", config_.endpoints.score);
}
ServiceProfile Orchestrator::segment_profile() const {
  return profile_for(config_, "segment", config_.endpoints.segment);
}

std::filesystem::path Orchestrator::out_path(const std::string& name) const {
  return std::filesystem::path(config_.out_dir) / name;
}

Image Orchestrator::load_pixels(const ImageRecord& record) const {
  std::filesystem::path path = record.uri;
  if (!config_.images_dir.empty() && path.is_relative()) {
    path = std::filesystem::path(config_.images_dir) / path;
  }
  return read_ppm(path);
}

namespace {

/// Runs fn(index) on a bounded worker pool; rethrows the first failure
/// after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (count == 0) return;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t index;
      {
        std::lock_guard lock(mu);
        if (failure || next >= count) return;
        index = next++;
      }
      try {
        fn(index);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::int64_t count_expressions(const std::vector<StageItem>& items) {
  std::int64_t n = 0;
  for (const auto& item : items) n += static_cast<std::int64_t>(item.expressions.size());
  return n;
}

}  // namespace

RunReport Orchestrator::run(const std::vector<Stage>& stages, const RunInputs& inputs,
                            bool resume) {
  std::filesystem::create_directories(config_.out_dir);
  // Keep pipeline order regardless of the caller's ordering.
  std::vector<Stage> ordered;
  for (Stage s : all_stages()) {
    if (std::find(stages.begin(), stages.end(), s) != stages.end()) ordered.push_back(s);
  }
  RunReport report;
  const auto start = std::chrono::steady_clock::now();
  for (Stage s : ordered) {
    report.stages.push_back(run_stage(s, inputs, resume));
  }
  report.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream out(out_path("run_report.json"), std::ios::trunc);
  out << report.to_json().dump(2) << '\n';
  return report;
}

StageReport Orchestrator::run_stage(Stage stage, const RunInputs& inputs, bool resume) {
  StageReport report;
  report.name = std::string(stage_name(stage));
  const auto stats_before = gateway_->stats();
  const auto start = std::chrono::steady_clock::now();

  if (stage == Stage::ingest) {
    stage_ingest(inputs, report);
  } else if (stage == Stage::stats) {
    run_stats(report);
  } else {
    // Every other stage maps the previous stage's items.
    Stage prev = Stage::ingest;
    for (std::size_t i = 1; i < all_stages().size(); ++i) {
      if (all_stages()[i] == stage) prev = all_stages()[i - 1];
    }
    const auto in_file = out_path(stage_file(prev));
    if (!std::filesystem::exists(in_file)) {
      throw PipelineError("stage '" + report.name + "' input missing: " + in_file.string() +
                          " (run stage '" + std::string(stage_name(prev)) + "' first)");
    }
    auto items = read_jsonl_as<StageItem>(in_file);
    std::sort(items.begin(), items.end(), [](const StageItem& a, const StageItem& b) {
      return a.record.image_id < b.record.image_id;
    });
    report.items_in = static_cast<int>(items.size());
    report.expressions_in = count_expressions(items);

    const auto out_file = out_path(stage_file(stage));
    std::set<std::string> done;
    if (resume && std::filesystem::exists(out_file)) {
      for (const auto& j : read_jsonl(out_file)) {
        done.insert(j.at("image_id").get<std::string>());
      }
    } else {
      std::filesystem::remove(out_file);
    }

    std::vector<const StageItem*> todo;
    for (const auto& item : items) {
      if (!done.count(item.record.image_id)) todo.push_back(&item);
    }

    std::mutex io_mu;
    std::int64_t expressions_out = 0;
    parallel_for(todo.size(), config_.max_in_flight, [&](std::size_t i) {
      StageItem out;
      switch (stage) {
        case Stage::global: out = process_global(*todo[i], report); break;
        case Stage::local: out = process_local(*todo[i], report); break;
        case Stage::filter: out = process_filter(*todo[i], report); break;
        case Stage::multiobj: out = process_multiobj(*todo[i], report); break;
        case Stage::postprocess: out = process_postprocess(*todo[i], report); break;
        default: throw PipelineError("unexpected stage");
      }
      std::lock_guard lock(io_mu);
      expressions_out += static_cast<std::int64_t>(out.expressions.size());
      append_jsonl(out_file, json(out));
    });

    const auto all = read_jsonl(out_file);
    report.items_out = static_cast<int>(all.size());
    report.expressions_out = 0;
    for (const auto& j : all) {
      report.expressions_out += static_cast<std::int64_t>(j.at("expressions").size());
    }

    if (stage == Stage::filter) finalize_filter();
    if (stage == Stage::multiobj) finalize_multiobj();
    if (stage == Stage::postprocess) finalize_postprocess();
  }

  report.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  // Request accounting for this stage = stats delta.
  for (const auto& [name, after] : gateway_->stats()) {
    RequestStats delta = after;
    const auto it = stats_before.find(name);
    if (it != stats_before.end()) {
      delta.count -= it->second.count;
      delta.retries -= it->second.retries;
      delta.total_s -= it->second.total_s;
    }
    if (delta.count > 0) report.requests[name] = delta;
  }
  return report;
}

void Orchestrator::stage_ingest(const RunInputs& inputs, StageReport& report) {
  if (inputs.coco.empty()) throw PipelineError("stage 'ingest' needs a detection annotation file");
  IngestReport ingest_report;
  auto records = load_detection_annotations(inputs.coco, &ingest_report);
  if (!inputs.refs.empty()) attach_seed_expressions(records, inputs.refs, &ingest_report);
  if (!inputs.captions.empty()) attach_captions(records, inputs.captions, &ingest_report);

  report.items_in = static_cast<int>(records.size());
  report.drops["skipped_annotations"] = ingest_report.skipped_annotations;
  report.drops["unmatched_refs"] = ingest_report.unmatched_refs;
  report.drops["dropped_captions"] = ingest_report.dropped_captions;

  std::vector<json> lines;
  for (auto& record : records) {
    const auto violations = validate_record(record);
    if (!violations.empty()) {
      report.drops["invalid_record"]++;
      continue;
    }
    StageItem item;
    item.record = std::move(record);
    lines.push_back(json(item));
  }
  write_jsonl(out_path(stage_file(Stage::ingest)), lines);
  report.items_out = static_cast<int>(lines.size());
}

StageItem Orchestrator::process_global(StageItem item, StageReport& report) {
  static std::mutex drops_mu;
  auto rng = make_rng(config_.rng_seed, "global", item.record.image_id);

  ImagePayload payload;
  payload.key = item.record.image_id;
  if (item.record.captions.empty()) {
    // Captions must be generated, which needs the pixels.
    try {
      const Image pixels = load_pixels(item.record);
      payload.bytes = encode_ppm(pixels);
    } catch (const PipelineError&) {
      std::lock_guard lock(drops_mu);
      report.drops["image_unreadable"]++;
      item.extra["global_skipped"] = "image_unreadable";
      return item;
    }
  }

  const auto outcome = run_global(item.record, payload, *gateway_, config_, prompts_,
                                  chat_profile(), vision_profile(), rng);
  if (outcome.parse_failed) {
    std::lock_guard lock(drops_mu);
    report.drops["global_parse_failed"]++;
    item.extra["global_skipped"] = "parse_failed";
    return item;
  }
  item.record.captions = outcome.captions;
  for (const auto& e : outcome.expressions) item.expressions.push_back(e);
  if (!outcome.unmatched_blocks.empty()) {
    item.extra["unmatched_blocks"] = outcome.unmatched_blocks;
    std::lock_guard lock(drops_mu);
    report.drops["unmatched_blocks"] +=
        static_cast<int>(outcome.unmatched_blocks.size());
  }
  return item;
}

StageItem Orchestrator::process_local(StageItem item, StageReport& report) {
  static std::mutex drops_mu;
  if (config_.local_repeats <= 0) return item;
  auto rng = make_rng(config_.rng_seed, "local", item.record.image_id);
  Image pixels;
  try {
    pixels = load_pixels(item.record);
  } catch (const PipelineError&) {
    std::lock_guard lock(drops_mu);
    report.drops["image_unreadable"]++;
    item.extra["local_skipped"] = "image_unreadable";
    return item;
  }
  const LocalMode mode = config_.cot_mode ? LocalMode::chain_of_thought : LocalMode::single_shot;
  for (const auto& object : item.record.objects) {
    for (int rep = 0; rep < config_.local_repeats; ++rep) {
      try {
        auto outcome = run_local(item.record, object, pixels, item.record.image_id, *gateway_,
                                 config_, prompts_, vision_profile(), rng, mode);
        for (auto& e : outcome.expressions) item.expressions.push_back(std::move(e));
      } catch (const GatewayError&) {
        // Per the local pipeline contract the object is skipped, not fatal.
        std::lock_guard lock(drops_mu);
        report.drops["local_gateway_fault"]++;
      }
    }
    if (!config_.debug_dir.empty()) {
      const int stroke = default_stroke_px(item.record.width_px, item.record.height_px);
      write_ppm(draw_bbox_overlay(pixels, object.bbox, stroke),
                std::filesystem::path(config_.debug_dir) /
                    (item.record.image_id + "_" + object.object_id + "_overlay.ppm"));
    }
  }
  return item;
}

StageItem Orchestrator::process_filter(StageItem item, StageReport& report) {
  static std::mutex drops_mu;
  std::vector<Expression> candidates;
  std::vector<Expression> passthrough;  // anything that is not a generated single-object text
  for (auto& e : item.expressions) {
    if (e.target.single() &&
        (e.source == ExpressionSource::global || e.source == ExpressionSource::local)) {
      candidates.push_back(std::move(e));
    } else {
      passthrough.push_back(std::move(e));
    }
  }
  item.expressions.clear();

  Image pixels;
  try {
    pixels = load_pixels(item.record);
  } catch (const PipelineError&) {
    std::lock_guard lock(drops_mu);
    report.drops["image_unreadable"]++;
    report.drops["filter_unscored"] += static_cast<int>(candidates.size());
    // Seeds still enter the stream, unscored.
    for (const auto& obj : item.record.objects) {
      for (const auto& seed : obj.seed_expressions) {
        Expression e;
        e.text = normalize_text(seed);
        e.target = TargetSet::of({obj.object_id});
        e.source = ExpressionSource::seed;
        if (!e.text.empty()) item.expressions.push_back(std::move(e));
      }
    }
    for (auto& e : passthrough) item.expressions.push_back(std::move(e));
    item.extra["filter_report"] = json::array();
    return item;
  }

  auto outcome = filter_expressions(candidates, item.record, pixels, *gateway_, config_,
                                    score_profile(), segment_profile());
  {
    std::lock_guard lock(drops_mu);
    report.drops["filtered_out"] += static_cast<int>(outcome.dropped.size());
  }
  for (auto& e : outcome.seeds_scored) item.expressions.push_back(std::move(e));
  for (auto& e : outcome.kept) item.expressions.push_back(std::move(e));
  for (auto& e : passthrough) item.expressions.push_back(std::move(e));

  json rows = json::array();
  for (const auto& row : outcome.report) {
    rows.push_back(json{{"image_id", row.image_id},
                        {"object_id", row.object_id},
                        {"text", row.text},
                        {"s_l", row.scores.s_l},
                        {"s_g", row.scores.s_g},
                        {"s_e", row.scores.s_e},
                        {"s_f", row.scores.s_f},
                        {"reference", row.reference},
                        {"kept", row.kept}});
  }
  item.extra["filter_report"] = std::move(rows);

  if (!config_.debug_dir.empty()) {
    for (const auto& obj : item.record.objects) {
      const Image prompted = render_visual_prompt(pixels, obj.bbox,
                                                  obj.mask ? &*obj.mask : nullptr,
                                                  VisualPromptSpec::default_composite());
      write_ppm(prompted, std::filesystem::path(config_.debug_dir) /
                              (item.record.image_id + "_" + obj.object_id + "_vp.ppm"));
    }
  }
  return item;
}

StageItem Orchestrator::process_multiobj(StageItem item, StageReport& report) {
  static std::mutex drops_mu;
  auto rng = make_rng(config_.rng_seed, "multiobj", item.record.image_id);

  std::vector<Expression> singles;
  std::vector<Expression> passthrough;
  for (auto& e : item.expressions) {
    if (e.target.single()) {
      singles.push_back(std::move(e));
    } else {
      passthrough.push_back(std::move(e));
    }
  }
  item.expressions.clear();

  // Commonality mining over per-object profiles.
  json clusters_report = json::array();
  json noise_report = json::array();
  std::vector<Expression> summarized;
  if (singles.size() >= 1 && item.record.objects.size() >= 2) {
    const auto profiles = build_profiles(item.record, singles, *gateway_, embed_profile());
    if (profiles.size() >= 2) {
      std::vector<std::vector<double>> points;
      for (const auto& p : profiles) points.push_back(p.embedding);
      const auto labels = dbscan(points, config_.dbscan_eps, config_.dbscan_min_pts);
      std::map<int, std::vector<ObjectProfile>> clusters;
      for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (labels[i] == kDbscanNoise) {
          noise_report.push_back(profiles[i].object_id);
        } else {
          clusters[labels[i]].push_back(profiles[i]);
        }
      }
      for (const auto& [label, members] : clusters) {
        if (members.size() < 2) {
          for (const auto& m : members) noise_report.push_back(m.object_id);
          continue;
        }
        const auto outcome =
            summarize_cluster(item.record, members, *gateway_, chat_profile(), prompts_);
        if (outcome.parse_failed) {
          std::lock_guard lock(drops_mu);
          report.drops["summary_parse_failed"]++;
          continue;
        }
        json cluster_j;
        json ids = json::array();
        json phrases = json::array();
        for (const auto& m : members) ids.push_back(m.object_id);
        for (const auto& e : outcome.expressions) phrases.push_back(e.text);
        cluster_j["object_ids"] = ids;
        cluster_j["phrases"] = phrases;
        clusters_report.push_back(std::move(cluster_j));
        for (const auto& e : outcome.expressions) summarized.push_back(e);
      }
    }
  }

  const auto spliced = splice_expressions(item.record, singles, rng, config_.splice_cap);
  auto transfer = transfer_ambiguous(item.record, singles);

  for (auto& e : transfer.remaining) item.expressions.push_back(std::move(e));
  for (auto& e : transfer.moved) item.expressions.push_back(std::move(e));
  for (auto& e : summarized) item.expressions.push_back(std::move(e));
  for (const auto& e : spliced) item.expressions.push_back(e);
  for (auto& e : passthrough) item.expressions.push_back(std::move(e));

  item.extra["clusters"] = std::move(clusters_report);
  item.extra["noise"] = std::move(noise_report);
  return item;
}

StageItem Orchestrator::process_postprocess(StageItem item, StageReport& report) {
  static std::mutex drops_mu;
  auto rng = make_rng(config_.rng_seed, "postprocess", item.record.image_id);

  auto deduped = dedup_expressions(item.expressions);

  // Synonymous rewriting of a seeded fraction; originals stay.
  std::vector<Expression> rewritten;
  for (const auto& e : deduped) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u >= config_.rewrite_fraction) continue;
    try {
      if (auto r = rewrite_synonymous(e, *gateway_, chat_profile(), prompts_)) {
        rewritten.push_back(std::move(*r));
      } else {
        std::lock_guard lock(drops_mu);
        report.drops["rewrite_discarded"]++;
      }
    } catch (const GatewayError&) {
      std::lock_guard lock(drops_mu);
      report.drops["rewrite_gateway_fault"]++;
    }
  }
  for (auto& e : rewritten) deduped.push_back(std::move(e));
  deduped = dedup_expressions(deduped);

  json records = json::array();
  int defaulted = 0;
  for (const auto& e : deduped) {
    const auto outcome = assign_group(e, *gateway_, chat_profile(), prompts_);
    if (outcome.defaulted) ++defaulted;
    records.push_back(json(make_indet_record(item.record, e, outcome.group)));
  }
  if (defaulted) {
    std::lock_guard lock(drops_mu);
    report.drops["group_defaulted"] += defaulted;
  }
  item.expressions = std::move(deduped);
  item.extra["indet_records"] = std::move(records);
  return item;
}

void Orchestrator::finalize_filter() {
  // The canonical filter report is derived from the checkpoint so clean and
  // resumed runs emit identical bytes.
  auto lines = read_jsonl(out_path(stage_file(Stage::filter)));
  std::vector<json> rows;
  for (const auto& line : lines) {
    const auto& extra = line.at("extra");
    if (!extra.contains("filter_report")) continue;
    for (const auto& row : extra.at("filter_report")) rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(), [](const json& a, const json& b) {
    return std::tie(a.at("image_id").get_ref<const std::string&>(),
                    a.at("object_id").get_ref<const std::string&>(),
                    a.at("text").get_ref<const std::string&>()) <
           std::tie(b.at("image_id").get_ref<const std::string&>(),
                    b.at("object_id").get_ref<const std::string&>(),
                    b.at("text").get_ref<const std::string&>());
  });
  write_jsonl(out_path("filter_report.jsonl"), rows);
}

void Orchestrator::finalize_multiobj() {
  auto lines = read_jsonl(out_path(stage_file(Stage::multiobj)));
  std::vector<json> rows;
  for (const auto& line : lines) {
    const auto& extra = line.at("extra");
    rows.push_back(json{{"image_id", line.at("image_id")},
                        {"clusters", extra.value("clusters", json::array())},
                        {"noise", extra.value("noise", json::array())}});
  }
  std::sort(rows.begin(), rows.end(), [](const json& a, const json& b) {
    return a.at("image_id").get_ref<const std::string&>() <
           b.at("image_id").get_ref<const std::string&>();
  });
  write_jsonl(out_path("cluster_report.jsonl"), rows);
}

void Orchestrator::finalize_postprocess() {
  auto lines = read_jsonl(out_path(stage_file(Stage::postprocess)));
  std::vector<InDetRecord> records;
  std::vector<std::string> image_ids;
  for (const auto& line : lines) {
    image_ids.push_back(line.at("image_id").get<std::string>());
    for (const auto& r : line.at("extra").at("indet_records")) {
      records.push_back(r.get<InDetRecord>());
    }
  }
  const auto split = split_images(image_ids, config_.splits, config_.rng_seed);
  emit_indet(records, split, config_.out_dir);
}

void Orchestrator::run_stats(StageReport& report) {
  const auto in_file = out_path(stage_file(Stage::postprocess));
  if (!std::filesystem::exists(in_file)) {
    throw PipelineError("stage 'stats' input missing: " + in_file.string() +
                        " (run stage 'postprocess' first)");
  }
  std::vector<InDetRecord> records;
  for (const auto& line : read_jsonl(in_file)) {
    for (const auto& r : line.at("extra").at("indet_records")) {
      records.push_back(r.get<InDetRecord>());
    }
  }
  report.items_in = static_cast<int>(records.size());
  std::sort(records.begin(), records.end(), [](const InDetRecord& a, const InDetRecord& b) {
    return std::tie(a.image_id, a.instruction, a.target.object_ids) <
           std::tie(b.image_id, b.instruction, b.target.object_ids);
  });
  const auto stats = compute_stats(records, *gateway_, embed_profile());
  std::ofstream out(out_path("stats.json"), std::ios::trunc);
  out << stats_to_json(stats).dump(2) << '\n';
  write_stats_csvs(stats, config_.out_dir);
  report.items_out = static_cast<int>(records.size());
}

}  // namespace indet
