#include <random>

#include <benchmark/benchmark.h>

#include "ualp/metrics.hpp"

namespace {

ualp::metrics::EvaluationSet random_set(std::size_t images, std::size_t detections_per_image) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> center(0.1, 0.9);
  std::uniform_real_distribution<double> size(0.02, 0.08);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  ualp::metrics::EvaluationSet set(images);
  for (std::size_t i = 0; i < images; ++i) {
    auto& image = set[i];
    image.image_id = "img_" + std::to_string(i);
    for (int t = 0; t < 2; ++t) image.truths.push_back({0, {center(rng), center(rng), size(rng), size(rng)}});
    for (std::size_t d = 0; d < detections_per_image; ++d) {
      image.detections.push_back({0, conf(rng), {center(rng), center(rng), size(rng), size(rng)}});
    }
    // near-copies of the truths so the sweep sees true positives
    for (const auto& t : image.truths) image.detections.push_back({0, conf(rng), t.box});
  }
  return set;
}

void BM_FrocSweep(benchmark::State& state) {
  const auto set = random_set(static_cast<std::size_t>(state.range(0)), 20);
  for (auto _ : state) benchmark::DoNotOptimize(ualp::metrics::froc_curve(set, 0.2, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 22);
}
BENCHMARK(BM_FrocSweep)->Arg(50)->Arg(500);

void BM_Evaluate(benchmark::State& state) {
  const auto set = random_set(200, 20);
  ualp::metrics::EvaluationSettings settings;
  for (auto _ : state) benchmark::DoNotOptimize(ualp::metrics::evaluate(set, settings));
}
BENCHMARK(BM_Evaluate);

}  // namespace
