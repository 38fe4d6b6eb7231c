#include "indet/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace indet {

using nlohmann::json;

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::ostringstream os;
  os << "invalid config:";
  for (const auto& s : v) os << "\n  " << s;
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations_in)
    : PipelineError(join_violations(violations_in)), violations(std::move(violations_in)) {}

void apply_endpoint_env(ServiceEndpoints& e) {
  auto maybe = [](std::string& field, const char* var) {
    if (!field.empty()) return;
    if (const char* v = std::getenv(var)) field = v;
  };
  maybe(e.chat, "INDET_CHAT_ENDPOINT");
  maybe(e.vision, "INDET_VISION_ENDPOINT");
  maybe(e.embed, "INDET_EMBED_ENDPOINT");
  maybe(e.score, "INDET_SCORE_ENDPOINT");
  maybe(e.segment, "INDET_SEGMENT_ENDPOINT");
  maybe(e.api_key, "INDET_API_KEY");
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig cfg;
  std::vector<std::string> violations;

  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const json::exception& e) {
      violations.push_back(std::string(key) + ": " + e.what());
    }
  };

  get("alpha1", cfg.alpha1);
  get("dbscan_eps", cfg.dbscan_eps);
  get("dbscan_min_pts", cfg.dbscan_min_pts);
  get("temperature", cfg.temperature);
  get("rng_seed", cfg.rng_seed);
  get("max_in_flight", cfg.max_in_flight);
  get("retrieval_k", cfg.retrieval_k);
  get("splice_cap", cfg.splice_cap);
  get("caption_repeats", cfg.caption_repeats);
  get("mock", cfg.mock);
  get("cot_mode", cfg.cot_mode);
  get("local_repeats", cfg.local_repeats);
  get("rewrite_fraction", cfg.rewrite_fraction);
  get("embed_dim", cfg.embed_dim);
  get("out_dir", cfg.out_dir);
  get("images_dir", cfg.images_dir);
  get("debug_dir", cfg.debug_dir);
  get("prompts_dir", cfg.prompts_dir);
  get("fixtures_path", cfg.fixtures_path);

  if (j.contains("splits")) {
    const auto& s = j.at("splits");
    auto gets = [&](const char* key, auto& field) {
      if (!s.contains(key)) return;
      try {
        s.at(key).get_to(field);
      } catch (const json::exception& e) {
        violations.push_back(std::string("splits.") + key + ": " + e.what());
      }
    };
    gets("train", cfg.splits.train);
    gets("val", cfg.splits.val);
    gets("test", cfg.splits.test);
    gets("train_ids", cfg.splits.train_ids);
    gets("val_ids", cfg.splits.val_ids);
    gets("test_ids", cfg.splits.test_ids);
  }
  if (j.contains("endpoints")) {
    const auto& s = j.at("endpoints");
    auto gete = [&](const char* key, std::string& field) {
      if (s.contains(key)) s.at(key).get_to(field);
    };
    gete("chat", cfg.endpoints.chat);
    gete("vision", cfg.endpoints.vision);
    gete("embed", cfg.endpoints.embed);
    gete("score", cfg.endpoints.score);
    gete("segment", cfg.endpoints.segment);
    gete("api_key", cfg.endpoints.api_key);
  }
  apply_endpoint_env(cfg.endpoints);

  if (cfg.alpha1 < 0.0 || cfg.alpha1 > 1.0) violations.push_back("alpha1: must be in [0,1]");
  if (!(cfg.dbscan_eps > 0.0)) violations.push_back("dbscan_eps: must be positive");
  if (cfg.dbscan_min_pts < 1) violations.push_back("dbscan_min_pts: must be >= 1");
  if (cfg.temperature < 0.0) violations.push_back("temperature: must be >= 0");
  if (cfg.max_in_flight < 1) violations.push_back("max_in_flight: must be >= 1");
  if (cfg.retrieval_k < 1) violations.push_back("retrieval_k: must be >= 1");
  if (cfg.splice_cap < 0) violations.push_back("splice_cap: must be >= 0");
  if (cfg.caption_repeats < 0) violations.push_back("caption_repeats: must be >= 0");
  if (cfg.local_repeats < 0) violations.push_back("local_repeats: must be >= 0");
  if (cfg.rewrite_fraction < 0.0 || cfg.rewrite_fraction > 1.0) {
    violations.push_back("rewrite_fraction: must be in [0,1]");
  }
  if (cfg.embed_dim < 1) violations.push_back("embed_dim: must be >= 1");
  if (!cfg.splits.explicit_lists()) {
    if (cfg.splits.train < 0 || cfg.splits.val < 0 || cfg.splits.test < 0 ||
        cfg.splits.train + cfg.splits.val + cfg.splits.test <= 0) {
      violations.push_back("splits: ratios must be non-negative with a positive sum");
    }
  }

  if (!violations.empty()) throw ConfigError(std::move(violations));
  return cfg;
}

PipelineConfig validate_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PipelineError("cannot open config file " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  // An empty file is a valid config: all paper defaults.
  std::string trimmed = content;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  if (trimmed.empty()) return config_from_json(json::object());
  json j;
  try {
    j = json::parse(content);
  } catch (const json::parse_error& e) {
    throw PipelineError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const PipelineConfig& cfg) {
  json j{{"alpha1", cfg.alpha1},
         {"dbscan_eps", cfg.dbscan_eps},
         {"dbscan_min_pts", cfg.dbscan_min_pts},
         {"temperature", cfg.temperature},
         {"rng_seed", cfg.rng_seed},
         {"max_in_flight", cfg.max_in_flight},
         {"retrieval_k", cfg.retrieval_k},
         {"splice_cap", cfg.splice_cap},
         {"caption_repeats", cfg.caption_repeats},
         {"mock", cfg.mock},
         {"cot_mode", cfg.cot_mode},
         {"local_repeats", cfg.local_repeats},
         {"rewrite_fraction", cfg.rewrite_fraction},
         {"embed_dim", cfg.embed_dim},
         {"out_dir", cfg.out_dir},
         {"images_dir", cfg.images_dir},
         {"debug_dir", cfg.debug_dir},
         {"prompts_dir", cfg.prompts_dir},
         {"fixtures_path", cfg.fixtures_path}};
  j["splits"] = {{"train", cfg.splits.train},
                 {"val", cfg.splits.val},
                 {"test", cfg.splits.test},
                 {"train_ids", cfg.splits.train_ids},
                 {"val_ids", cfg.splits.val_ids},
                 {"test_ids", cfg.splits.test_ids}};
  return j;
}

}  // namespace indet
