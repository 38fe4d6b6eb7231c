#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "indet/types.hpp"

namespace indet {

struct ConfigError : PipelineError {
  explicit ConfigError(std::vector<std::string> violations_in);
  std::vector<std::string> violations;
};

struct ServiceEndpoints {
  std::string chat;
  std::string vision;
  std::string embed;
  std::string score;
  std::string segment;
  std::string api_key;
};

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  // When any explicit list is non-empty, lists are honored verbatim and
  // must partition the image set.
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;

  bool explicit_lists() const {
    return !train_ids.empty() || !val_ids.empty() || !test_ids.empty();
  }
};

struct PipelineConfig {
  double alpha1 = 0.5;
  double dbscan_eps = 1.5;
  int dbscan_min_pts = 2;
  double temperature = 0.7;
  std::uint64_t rng_seed = 0;
  int max_in_flight = 4;
  int retrieval_k = 2;
  int splice_cap = 10;      // spliced expressions per image
  int caption_repeats = 2;

  bool mock = false;
  bool cot_mode = false;     // chain-of-thought local prompting (6x requests)
  int local_repeats = 1;     // invocations per object in the local pipeline
  double rewrite_fraction = 0.2;
  int embed_dim = 16;        // mock embedding dimension
  SplitSpec splits;

  std::string out_dir = "out";
  std::string images_dir;    // base for ImageRecord.uri; empty = cwd
  std::string debug_dir;     // when set, prompted/overlay images are dumped
  std::string prompts_dir;   // when set, prompt data files override built-ins
  std::string fixtures_path; // mock fixture JSONL
  ServiceEndpoints endpoints;
};

/// Applies defaults, reads environment endpoint overrides, and throws a
/// ConfigError listing every violation with its field path.
PipelineConfig config_from_json(const nlohmann::json& j);

/// Parses the file (empty config file means all defaults).
PipelineConfig validate_config(const std::filesystem::path& path);

nlohmann::json config_to_json(const PipelineConfig& cfg);

/// Environment variables consulted for endpoints when the config leaves
/// them empty: INDET_CHAT_ENDPOINT, INDET_VISION_ENDPOINT,
/// INDET_EMBED_ENDPOINT, INDET_SCORE_ENDPOINT, INDET_SEGMENT_ENDPOINT,
/// INDET_API_KEY.
void apply_endpoint_env(ServiceEndpoints& endpoints);

}  // namespace indet
