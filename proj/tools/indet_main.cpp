// Command-line surface for the instruction generation engine.
//
// Subcommands mirror the pipeline stages: ingest | generate | filter |
// multiobj | postprocess | stats | run-all. Exit code 0 on success;
// failures print machine-readable JSON on stderr.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "indet/config.hpp"
#include "indet/jsonl.hpp"
#include "indet/orchestrator.hpp"
#include "indet/prompts.hpp"

namespace {

using indet::PipelineConfig;
using indet::Stage;

struct CommonFlags {
  std::string config_path;
  std::optional<bool> mock;
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;
  std::optional<double> alpha1;
  std::optional<double> eps;
  std::optional<int> min_pts;
  std::optional<double> temperature;
  std::string out_dir;
  std::string images_dir;
  bool resume = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Pipeline config JSON file");
  cmd->add_flag("--mock,!--no-mock", flags.mock, "Use the deterministic in-repo mock services");
  cmd->add_option("--seed", flags.seed, "Root RNG seed");
  cmd->add_option("--concurrency", flags.concurrency, "Per-service in-flight cap");
  cmd->add_option("--alpha1", flags.alpha1, "Final-score balance in [0,1]");
  cmd->add_option("--eps", flags.eps, "DBSCAN neighbourhood radius");
  cmd->add_option("--min-pts", flags.min_pts, "DBSCAN core-point minimum");
  cmd->add_option("--temperature", flags.temperature, "Chat sampling temperature");
  cmd->add_option("--out-dir", flags.out_dir, "Checkpoint and output directory");
  cmd->add_option("--images-dir", flags.images_dir, "Base directory for image locators");
  cmd->add_flag("--resume", flags.resume, "Skip images already in a stage checkpoint");
}

PipelineConfig build_config(const CommonFlags& flags) {
  PipelineConfig cfg = flags.config_path.empty() ? PipelineConfig{}
                                                 : indet::validate_config(flags.config_path);
  if (flags.mock) cfg.mock = *flags.mock;
  if (flags.seed) cfg.rng_seed = *flags.seed;
  if (flags.concurrency) cfg.max_in_flight = *flags.concurrency;
  if (flags.alpha1) cfg.alpha1 = *flags.alpha1;
  if (flags.eps) cfg.dbscan_eps = *flags.eps;
  if (flags.min_pts) cfg.dbscan_min_pts = *flags.min_pts;
  if (flags.temperature) cfg.temperature = *flags.temperature;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (!flags.images_dir.empty()) cfg.images_dir = flags.images_dir;
  // Re-check ranges after CLI overrides.
  return indet::config_from_json(indet::config_to_json(cfg));
}

int run_stages(const CommonFlags& flags, const std::vector<Stage>& stages,
               const indet::RunInputs& inputs) {
  const PipelineConfig cfg = build_config(flags);
  const indet::PromptLibrary prompts = cfg.prompts_dir.empty()
                                           ? indet::PromptLibrary::builtin()
                                           : indet::PromptLibrary::load(cfg.prompts_dir);
  indet::Orchestrator orchestrator(cfg, indet::make_gateway(cfg), prompts);
  const auto report = orchestrator.run(stages, inputs, flags.resume);
  std::cout << report.to_json().dump(2) << std::endl;
  return 0;
}

void dump_prompts(const std::filesystem::path& dir) {
  const auto& lib = indet::PromptLibrary::builtin();
  std::filesystem::create_directories(dir);
  auto write_lines = [&](const char* name, const std::vector<std::string>& lines) {
    std::ofstream out(dir / name, std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
  };
  auto write_text = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::trunc);
    out << text << '\n';
  };
  write_lines("caption_prompts.txt", lib.caption_prompts);
  write_lines("local_prompts.txt", lib.local_prompts);
  write_lines("cot_prompts.txt", lib.cot_prompts);
  write_text("global_task.txt", lib.global_task);
  write_text("summarize_task.txt", lib.summarize_task);
  write_text("leveling_task.txt", lib.leveling_task);
  write_text("rewrite_prompt.txt", lib.rewrite_prompt);

  nlohmann::json global = nlohmann::json::array();
  for (const auto& ex : lib.global_examples) {
    global.push_back({{"image2text", ex.image2text}, {"response", ex.response}});
  }
  nlohmann::json summarize = nlohmann::json::array();
  for (const auto& ex : lib.summarize_examples) {
    summarize.push_back({{"prompt", ex.prompt}, {"response", ex.response}});
  }
  nlohmann::json leveling = nlohmann::json::array();
  for (const auto& ex : lib.leveling_examples) {
    leveling.push_back({{"prompt", ex.prompt}, {"response", ex.response}});
  }
  std::ofstream(dir / "global_examples.json", std::ios::trunc) << global.dump(2) << '\n';
  std::ofstream(dir / "summarize_examples.json", std::ios::trunc) << summarize.dump(2) << '\n';
  std::ofstream(dir / "leveling_examples.json", std::ios::trunc) << leveling.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Referring-object-detection instruction dataset engine"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string coco, refs, captions, prompts_out;

  auto* ingest = app.add_subcommand("ingest", "Load source annotations into image records");
  add_common_flags(ingest, flags);
  ingest->add_option("--coco", coco, "COCO-style detection JSON")->required();
  ingest->add_option("--refs", refs, "Referring-expression JSONL");
  ingest->add_option("--captions", captions, "Caption JSONL");

  auto* generate = app.add_subcommand("generate", "Run the global and local prompt pipelines");
  add_common_flags(generate, flags);

  auto* filter = app.add_subcommand("filter", "Score and filter candidate expressions");
  add_common_flags(filter, flags);

  auto* multiobj = app.add_subcommand("multiobj", "Mine multi-object expressions");
  add_common_flags(multiobj, flags);

  auto* postprocess =
      app.add_subcommand("postprocess", "Dedup, rewrite, group, and emit the dataset");
  add_common_flags(postprocess, flags);

  auto* stats = app.add_subcommand("stats", "Compute dataset statistics");
  add_common_flags(stats, flags);

  auto* run_all = app.add_subcommand("run-all", "Run every stage in pipeline order");
  add_common_flags(run_all, flags);
  run_all->add_option("--coco", coco, "COCO-style detection JSON")->required();
  run_all->add_option("--refs", refs, "Referring-expression JSONL");
  run_all->add_option("--captions", captions, "Caption JSONL");

  auto* prompts_cmd = app.add_subcommand("dump-prompts", "Write the built-in prompt data files");
  prompts_cmd->add_option("--dir", prompts_out, "Target directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    indet::RunInputs inputs{coco, refs, captions};
    if (ingest->parsed()) return run_stages(flags, {Stage::ingest}, inputs);
    if (generate->parsed()) return run_stages(flags, {Stage::global, Stage::local}, inputs);
    if (filter->parsed()) return run_stages(flags, {Stage::filter}, inputs);
    if (multiobj->parsed()) return run_stages(flags, {Stage::multiobj}, inputs);
    if (postprocess->parsed()) return run_stages(flags, {Stage::postprocess}, inputs);
    if (stats->parsed()) return run_stages(flags, {Stage::stats}, inputs);
    if (run_all->parsed()) return run_stages(flags, indet::all_stages(), inputs);
    if (prompts_cmd->parsed()) {
      dump_prompts(prompts_out);
      return 0;
    }
  } catch (const indet::ConfigError& e) {
    nlohmann::json err{{"error", "config"}, {"violations", e.violations}};
    std::cerr << err.dump() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", "pipeline"}, {"message", e.what()}};
    std::cerr << err.dump() << std::endl;
    return 1;
  }
  return 0;
}
