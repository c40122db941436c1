#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "ualp/geometry.hpp"

namespace {

using ualp::geometry::BBox;
using ualp::geometry::PixelMask;

std::vector<BBox> random_boxes(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.0, 480.0);
  std::uniform_real_distribution<double> size(4.0, 32.0);
  std::vector<BBox> boxes;
  boxes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pos(rng);
    const double y = pos(rng);
    boxes.push_back({x, y, x + size(rng), y + size(rng)});
  }
  return boxes;
}

void BM_Iou(benchmark::State& state) {
  const auto boxes = random_boxes(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ualp::geometry::iou(boxes[i & 1023], boxes[(i + 1) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_Iou);

// Scattered blobs on a square canvas.
PixelMask blob_mask(std::size_t side) {
  PixelMask mask(side, side);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> pos(0, side - 1);
  for (int blob = 0; blob < 64; ++blob) {
    const std::size_t cx = pos(rng);
    const std::size_t cy = pos(rng);
    for (std::size_t y = cy; y < std::min(side, cy + side / 24); ++y) {
      for (std::size_t x = cx; x < std::min(side, cx + side / 24); ++x) mask.set(x, y, 255);
    }
  }
  return mask;
}

void BM_Components(benchmark::State& state) {
  const auto mask = blob_mask(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ualp::geometry::components_from_mask(mask, ualp::geometry::ComponentConfig{}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Components)->Arg(256)->Arg(512)->Arg(1024);

void BM_BboxFromMask(benchmark::State& state) {
  const auto mask = blob_mask(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ualp::geometry::bbox_from_mask(mask));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_BboxFromMask)->Arg(512)->Arg(1024);

}  // namespace
