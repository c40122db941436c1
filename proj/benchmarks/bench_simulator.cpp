#include <benchmark/benchmark.h>

#include "ualp/simulator.hpp"

namespace {

using namespace ualp::simulator;

void BM_GenerateScene(benchmark::State& state) {
  SceneConfig config;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_scene(config, image_id(i++)));
}
BENCHMARK(BM_GenerateScene);

void BM_RenderStructure(benchmark::State& state) {
  SceneConfig config;
  const auto scene = generate_scene(config, image_id(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_structure(scene, "lung", config.image_size, config.image_size));
  }
}
BENCHMARK(BM_RenderStructure);

void BM_SimulateImage(benchmark::State& state) {
  SceneConfig config;
  const auto scene = generate_scene(config, image_id(0));
  DetectorProfile profile;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_image(profile, scene, config.image_size, config.image_size, "img", 42));
  }
}
BENCHMARK(BM_SimulateImage);

}  // namespace
