#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "indet/config.hpp"
#include "indet/gateway.hpp"
#include "indet/image.hpp"
#include "indet/prompts.hpp"
#include "indet/types.hpp"

namespace indet {

enum class Stage { ingest, global, local, filter, multiobj, postprocess, stats };

std::string_view stage_name(Stage stage);
Stage stage_from_string(std::string_view name);
const std::vector<Stage>& all_stages();
/// Checkpoint file for a stage, e.g. "02_global.jsonl".
std::string stage_file(Stage stage);

struct RunInputs {
  std::filesystem::path coco;      // COCO-style detection JSON (ingest)
  std::filesystem::path refs;      // optional refs JSONL
  std::filesystem::path captions;  // optional captions JSONL
};

struct StageReport {
  std::string name;
  int items_in = 0;
  int items_out = 0;
  std::int64_t expressions_in = 0;
  std::int64_t expressions_out = 0;
  std::map<std::string, int> drops;  // reason -> count
  double wall_s = 0.0;
  std::map<std::string, RequestStats> requests;  // per service profile
};

struct RunReport {
  std::vector<StageReport> stages;
  double wall_s = 0.0;
  nlohmann::json to_json() const;
};

/// Per-image unit of work flowing between stages.
struct StageItem {
  ImageRecord record;
  std::vector<Expression> expressions;
  nlohmann::json extra = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const StageItem& item);
void from_json(const nlohmann::json& j, StageItem& item);

/// MockGateway when config.mock, HttpGateway otherwise.
std::shared_ptr<Gateway> make_gateway(const PipelineConfig& config);

/// Staged execution with per-image JSONL checkpoints under config.out_dir.
/// Stages run in pipeline order; each reads the previous stage's file.
/// With resume=true, images already present in a stage's checkpoint are not
/// reprocessed; checkpoints are append-only during a run. Final artifacts
/// (InDET splits, reports) are rewritten canonically when a stage
/// completes, so resumed and clean runs emit identical bytes.
class Orchestrator {
 public:
  Orchestrator(PipelineConfig config, std::shared_ptr<Gateway> gateway, PromptLibrary prompts);

  RunReport run(const std::vector<Stage>& stages, const RunInputs& inputs, bool resume = false);

  const PipelineConfig& config() const { return config_; }
  Gateway& gateway() { return *gateway_; }

  ServiceProfile chat_profile() const;
  ServiceProfile vision_profile() const;
  ServiceProfile embed_profile() const;
  ServiceProfile score_profile() const;
  ServiceProfile segment_profile() const;

 private:
  StageReport run_stage(Stage stage, const RunInputs& inputs, bool resume);
  void stage_ingest(const RunInputs& inputs, StageReport& report);
  StageItem process_global(StageItem item, StageReport& report);
  StageItem process_local(StageItem item, StageReport& report);
  StageItem process_filter(StageItem item, StageReport& report);
  StageItem process_multiobj(StageItem item, StageReport& report);
  StageItem process_postprocess(StageItem item, StageReport& report);
  void finalize_filter();
  void finalize_multiobj();
  void finalize_postprocess();
  void run_stats(StageReport& report);

  std::filesystem::path out_path(const std::string& name) const;
  Image load_pixels(const ImageRecord& record) const;

  PipelineConfig config_;
  std::shared_ptr<Gateway> gateway_;
  PromptLibrary prompts_;
};

}  // namespace indet
