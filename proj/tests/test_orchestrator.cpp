#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "indet/jsonl.hpp"
#include "indet/mock_gateway.hpp"
#include "indet/orchestrator.hpp"

#include "e2e_fixture.hpp"

using namespace indet;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> sorted_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  std::sort(lines.begin(), lines.end());
  return lines;
}

}  // namespace

TEST_CASE("run-all is byte-identical across runs with the same seed") {
  const auto fixture = testutil::write_e2e_fixture(fresh_dir("indet_e2e_src"));
  const RunInputs inputs{fixture.coco, fixture.refs, fixture.captions};

  const auto out1 = fresh_dir("indet_e2e_run1");
  const auto out2 = fresh_dir("indet_e2e_run2");
  for (const auto& out : {out1, out2}) {
    auto cfg = testutil::e2e_config(out, fixture);
    Orchestrator orch(cfg, make_gateway(cfg), PromptLibrary::builtin());
    const auto report = orch.run(all_stages(), inputs);
    CHECK(report.stages.size() == all_stages().size());
  }
  for (const char* name : {"indet_train.jsonl", "indet_val.jsonl", "indet_test.jsonl",
                           "stats.json", "filter_report.jsonl", "cluster_report.jsonl",
                           "histogram.csv", "group_ratios.csv"}) {
    CHECK(testutil::file_bytes(out1 / name) == testutil::file_bytes(out2 / name));
  }
  // The dataset is non-trivial: records exist and groups are in range.
  std::size_t records = 0;
  for (const char* split : {"indet_train.jsonl", "indet_val.jsonl", "indet_test.jsonl"}) {
    for (const auto& j : read_jsonl(out1 / split)) {
      const auto r = j.get<InDetRecord>();
      const bool multi = r.target.size() >= 2;
      CHECK(is_multi_object_group(r.group) == multi);
      CHECK(r.bboxes.size() == r.target.size());
      ++records;
    }
  }
  CHECK(records > 10);
}

TEST_CASE("a different seed changes the outputs") {
  const auto fixture = testutil::write_e2e_fixture(fresh_dir("indet_seed_src"));
  const RunInputs inputs{fixture.coco, fixture.refs, fixture.captions};
  const auto out1 = fresh_dir("indet_seed_run1");
  const auto out2 = fresh_dir("indet_seed_run2");
  auto cfg1 = testutil::e2e_config(out1, fixture, 7);
  auto cfg2 = testutil::e2e_config(out2, fixture, 8);
  Orchestrator(cfg1, make_gateway(cfg1), PromptLibrary::builtin()).run(all_stages(), inputs);
  Orchestrator(cfg2, make_gateway(cfg2), PromptLibrary::builtin()).run(all_stages(), inputs);
  CHECK(testutil::file_bytes(out1 / "indet_train.jsonl") !=
        testutil::file_bytes(out2 / "indet_train.jsonl"));
}

TEST_CASE("stage composition: {ingest,global} then {local} equals {ingest,global,local}") {
  const auto fixture = testutil::write_e2e_fixture(fresh_dir("indet_assoc_src"));
  const RunInputs inputs{fixture.coco, fixture.refs, fixture.captions};
  const auto split_dir = fresh_dir("indet_assoc_split");
  const auto joint_dir = fresh_dir("indet_assoc_joint");

  auto cfg_split = testutil::e2e_config(split_dir, fixture);
  Orchestrator split_orch(cfg_split, make_gateway(cfg_split), PromptLibrary::builtin());
  split_orch.run({Stage::ingest, Stage::global}, inputs);
  split_orch.run({Stage::local}, inputs);

  auto cfg_joint = testutil::e2e_config(joint_dir, fixture);
  Orchestrator joint_orch(cfg_joint, make_gateway(cfg_joint), PromptLibrary::builtin());
  joint_orch.run({Stage::ingest, Stage::global, Stage::local}, inputs);

  // Content equality up to line ordering (workers write in completion order).
  CHECK(sorted_lines(split_dir / stage_file(Stage::local)) ==
        sorted_lines(joint_dir / stage_file(Stage::local)));
}

TEST_CASE("a missing stage input names the stage") {
  const auto out = fresh_dir("indet_missing");
  auto cfg = testutil::e2e_config(out, {out, "", "", ""});
  Orchestrator orch(cfg, make_gateway(cfg), PromptLibrary::builtin());
  try {
    orch.run({Stage::filter}, RunInputs{});
    FAIL("expected missing-input fault");
  } catch (const PipelineError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("filter") != std::string::npos);
    CHECK(msg.find("local") != std::string::npos);  // names the producer stage
  }
}

TEST_CASE("resume skips completed images and converges to identical outputs") {
  const auto fixture = testutil::write_e2e_fixture(fresh_dir("indet_resume_src"));
  const RunInputs inputs{fixture.coco, fixture.refs, fixture.captions};

  // Clean full run for reference.
  const auto clean = fresh_dir("indet_resume_clean");
  auto cfg_clean = testutil::e2e_config(clean, fixture);
  Orchestrator(cfg_clean, make_gateway(cfg_clean), PromptLibrary::builtin())
      .run(all_stages(), inputs);

  // Interrupted run: stop after the filter checkpoint holds one image.
  const auto resumed = fresh_dir("indet_resume_partial");
  auto cfg_resumed = testutil::e2e_config(resumed, fixture);
  {
    Orchestrator orch(cfg_resumed, make_gateway(cfg_resumed), PromptLibrary::builtin());
    orch.run({Stage::ingest, Stage::global, Stage::local, Stage::filter}, inputs);
    // Simulate a kill mid-filter: keep only the first checkpoint line.
    const auto filter_file = resumed / stage_file(Stage::filter);
    const auto lines = read_jsonl(filter_file);
    REQUIRE(lines.size() == 3);
    write_jsonl(filter_file, {lines.front()});
    fs::remove(resumed / "filter_report.jsonl");
  }
  // Resume with a fresh gateway; completed images must not be re-scored.
  auto gateway = std::make_shared<MockGateway>([] {
    MockOptions o;
    o.seed = 7;
    return o;
  }());
  Orchestrator orch(cfg_resumed, gateway, PromptLibrary::builtin());
  orch.run({Stage::filter}, inputs, /*resume=*/true);
  const auto done_id = read_jsonl(resumed / stage_file(Stage::filter))
                           .front()
                           .at("image_id")
                           .get<std::string>();
  // The resumed run scored only the two remaining images: fewer score calls
  // than a full filter pass.
  auto full_gateway = std::make_shared<MockGateway>([] {
    MockOptions o;
    o.seed = 7;
    return o;
  }());
  const auto probe = fresh_dir("indet_resume_probe");
  auto cfg_probe = testutil::e2e_config(probe, fixture);
  {
    Orchestrator probe_orch(cfg_probe, full_gateway, PromptLibrary::builtin());
    probe_orch.run({Stage::ingest, Stage::global, Stage::local, Stage::filter}, inputs);
  }
  CHECK(gateway->stats().at("score").count < full_gateway->stats().at("score").count);
  (void)done_id;

  // Finish the pipeline and compare the final artifacts byte for byte.
  orch.run({Stage::multiobj, Stage::postprocess, Stage::stats}, inputs);
  for (const char* name : {"indet_train.jsonl", "indet_val.jsonl", "indet_test.jsonl",
                           "stats.json", "filter_report.jsonl"}) {
    CHECK(testutil::file_bytes(clean / name) == testutil::file_bytes(resumed / name));
  }
}

TEST_CASE("run report carries throughput accounting fields") {
  const auto fixture = testutil::write_e2e_fixture(fresh_dir("indet_report_src"));
  const RunInputs inputs{fixture.coco, fixture.refs, fixture.captions};
  const auto out = fresh_dir("indet_report_run");
  auto cfg = testutil::e2e_config(out, fixture);
  Orchestrator orch(cfg, make_gateway(cfg), PromptLibrary::builtin());
  const auto report = orch.run(all_stages(), inputs);
  const auto j = report.to_json();
  REQUIRE(j.contains("stages"));
  bool saw_requests = false;
  for (const auto& stage : j["stages"]) {
    CHECK(stage.contains("s_per_image"));
    CHECK(stage.contains("s_per_instruction"));
    CHECK(stage["accounting"]["image"].get<std::string>().find("s/image") != std::string::npos);
    CHECK(stage["accounting"]["instruction"].get<std::string>().find("s/instr.") !=
          std::string::npos);
    if (!stage["requests"].empty()) saw_requests = true;
  }
  CHECK(saw_requests);
  CHECK(fs::exists(out / "run_report.json"));
}
