#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ualp/dataset.hpp"
#include "ualp/geometry.hpp"
#include "ualp/metrics.hpp"
#include "ualp/mining.hpp"
#include "ualp/simulator.hpp"

namespace ualp::experiment {

struct ExperimentConfig {
  simulator::SceneConfig scene = [] {
    simulator::SceneConfig s;
    s.write_masks = false;
    return s;
  }();
  simulator::DetectorProfile detector;  // variant and upost_learned are set per model
  mining::MatchConfig mining;           // IoU 0.2, confidence 0.25
  std::vector<double> mined_count_thresholds{0.001, 0.25};
  dataset::LabelSetVariant mining_variant = dataset::LabelSetVariant::TargetPlusPrior;
  metrics::EvaluationSettings evaluation;
  geometry::ComponentConfig components;
  std::size_t workers = 1;

  void validate() const;
};

struct VariantResult {
  dataset::LabelSetVariant variant = dataset::LabelSetVariant::Full;
  std::size_t vocabulary_size = 0;
  metrics::EvaluationSummary evaluation;
  std::vector<std::pair<double, std::size_t>> mined_fp;  // (confidence threshold, FP count on the training split)

  double sensitivity(double iou_threshold, double fppi) const;
  double pr_auc(double iou_threshold) const;
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  std::size_t uprior_boxes = 0;
  std::size_t missing_masks = 0;
  std::size_t images_mined = 0;
  std::size_t mined_fp_count = 0;
  std::vector<VariantResult> variants;  // TargetOnly, TargetPlusPrior, Full
  std::vector<std::string> curve_files;  // relative to the output directory

  const VariantResult& variant(dataset::LabelSetVariant v) const;
  std::string to_json(const ExperimentConfig& config) const;
};

/// Top-level keys of report.json, in order.
inline constexpr std::array<std::string_view, 7> kReportKeys = {"report", "note",    "seed",  "scene",
                                                                "policy", "variants", "curves"};
/// Keys of each entry of "variants", in order.
inline constexpr std::array<std::string_view, 6> kVariantKeys = {"variant", "vocabulary_size", "sensitivity",
                                                                 "pr_auc",  "entropy",         "mined_fp"};

/// Generates a synthetic dataset, builds the anatomy labels from its masks,
/// mines false positives of the mining-variant detector on the training
/// split, composes the three label sets, simulates one detector per variant
/// on the validation split and evaluates them. Everything, report.json
/// included, is written under `out_dir`.
ExperimentReport run_policy_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace ualp::experiment
