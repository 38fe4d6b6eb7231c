#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "indet/global_pipeline.hpp"
#include "indet/image.hpp"
#include "indet/multi_object.hpp"
#include "indet/text.hpp"
#include "indet/visual_prompt.hpp"

namespace {

indet::Image noise_image(int w, int h, std::uint64_t seed) {
  indet::Image img = indet::Image::solid(w, h, {0, 0, 0});
  std::mt19937_64 rng(seed);
  for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

void BM_GaussianBlur(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const auto img = noise_image(size, size, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(indet::gaussian_blur(img, indet::blur_sigma(size, size)));
  }
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_GaussianBlur)->Arg(64)->Arg(128)->Arg(256);

void BM_RenderVisualPrompt(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const auto img = noise_image(size, size, 2);
  const indet::BBoxNorm bbox{0.25, 0.25, 0.75, 0.75};
  const auto spec = indet::VisualPromptSpec::default_composite();
  for (auto _ : state) {
    benchmark::DoNotOptimize(indet::render_visual_prompt(img, bbox, nullptr, spec));
  }
}
BENCHMARK(BM_RenderVisualPrompt)->Arg(64)->Arg(256);

void BM_ParseObjectBlocks(benchmark::State& state) {
  std::string response;
  for (int b = 0; b < 8; ++b) {
    response += "**[object " + std::to_string(b) + "/thing " + std::to_string(b) + "]**\n";
    response += "(1) first phrase, second phrase, third phrase, fourth phrase\n";
    response += "(2) near another object, beside the wall, under the light\n\n";
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(indet::parse_object_blocks(response));
  }
}
BENCHMARK(BM_ParseObjectBlocks);

void BM_Dbscan(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist(0.0, 2.0);
  std::vector<std::vector<double>> points(n, std::vector<double>(8));
  for (auto& p : points) {
    for (auto& x : p) x = dist(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(indet::dbscan(points, 1.5, 2));
  }
}
BENCHMARK(BM_Dbscan)->Arg(32)->Arg(128)->Arg(512);

void BM_NormalizeText(benchmark::State& state) {
  std::string messy;
  for (int i = 0; i < 64; ++i) messy += "  some   spaced\t words \n";
  for (auto _ : state) {
    benchmark::DoNotOptimize(indet::normalize_text(messy));
  }
}
BENCHMARK(BM_NormalizeText);

}  // namespace

BENCHMARK_MAIN();
