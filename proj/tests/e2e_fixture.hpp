#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "indet/config.hpp"
#include "indet/image.hpp"
#include "indet/orchestrator.hpp"

#include "helpers.hpp"

namespace testutil {

// Three-image source corpus: one image with seed expressions, one with
// shipped captions, one with two same-category instances.
struct E2eFixture {
  std::filesystem::path dir;
  std::filesystem::path coco;
  std::filesystem::path refs;
  std::filesystem::path captions;
};

inline E2eFixture write_e2e_fixture(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  using nlohmann::json;

  indet::write_ppm(noise_image(64, 48, 1001), dir / "imgA.ppm");
  indet::write_ppm(noise_image(48, 64, 1002), dir / "imgB.ppm");
  indet::write_ppm(noise_image(56, 56, 1003), dir / "imgC.ppm");

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
  E2eFixture f;
  f.dir = dir;
  f.coco = dir / "coco.json";
  std::ofstream(f.coco, std::ios::trunc) << coco.dump(2);

  f.refs = dir / "refs.jsonl";
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

  f.captions = dir / "captions.jsonl";
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

inline indet::PipelineConfig e2e_config(const std::filesystem::path& out_dir,
                                        const E2eFixture& fixture, std::uint64_t seed = 7) {
  indet::PipelineConfig cfg;
  cfg.mock = true;
  cfg.rng_seed = seed;
  cfg.out_dir = out_dir.string();
  cfg.images_dir = fixture.dir.string();
  cfg.splits.train = cfg.splits.val = cfg.splits.test = 1.0 / 3.0;
  return cfg;
}

inline std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw indet::PipelineError("missing file " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace testutil
