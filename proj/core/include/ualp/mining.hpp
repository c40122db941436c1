#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ualp/dataset.hpp"
#include "ualp/manifest.hpp"

namespace ualp::mining {

using dataset::Detection;
using dataset::GroundTruthObject;

struct MatchConfig {
  double iou_threshold = 0.2;
  double confidence_threshold = 0.25;
  int target_class_id = 0;

  /// Throws Error(ConfigError) when a threshold is out of range.
  void validate() const;
};

enum class Verdict { TP, FP };

struct MatchedDetection {
  std::size_t detection_index = 0;  // index into the caller's detection list
  Verdict verdict = Verdict::FP;
  std::optional<std::size_t> truth_index;
  double iou = 0.0;  // best overlap with the claimed truth; 0 for unmatched FPs
  double confidence = 0.0;
};

/// Retained target-class detections in processing order.
struct MatchResult {
  std::vector<MatchedDetection> matches;

  std::size_t tp_count() const noexcept;
  std::size_t fp_count() const noexcept;
};

/// Canonical processing order: descending confidence, then ascending
/// x_min, y_min, x_max, y_max.
bool processes_before(const Detection& a, const Detection& b) noexcept;

/// Greedy one-to-one assignment. Only target-class detections with
/// confidence >= confidence_threshold and target-class truths take part.
/// Each detection, in canonical order, claims the unmatched truth with the
/// highest IoU (lowest index on ties) if that IoU reaches iou_threshold;
/// otherwise it is a false positive.
MatchResult match_detections(std::span<const Detection> detections, std::span<const GroundTruthObject> truths,
                             const MatchConfig& config);

struct MiningReport {
  std::size_t images_processed = 0;
  std::size_t fp_count = 0;
  std::vector<std::pair<std::string, std::size_t>> per_image;  // training images, manifest order
  std::map<std::size_t, std::size_t> histogram;                // fp per image -> image count

  std::string to_json() const;
  std::string to_csv() const;
};

/// False positives per training image (manifest order of the training
/// split), each list in processing order. Throws Error(MissingPredictions)
/// naming every training image without a prediction file.
std::vector<std::vector<Detection>> mine_false_positives(const dataset::DatasetManifest& manifest,
                                                         const MatchConfig& config, std::size_t workers = 1);

MiningReport summarize_mining(const dataset::DatasetManifest& manifest,
                              const std::vector<std::vector<Detection>>& false_positives);

struct MiningResult {
  dataset::DatasetManifest manifest;  // labels = original labels + mined fp boxes
  MiningReport report;
  int fp_class_id = 0;
};

/// Writes upost/<id>.txt for each training image, merged labels under
/// labels/, mining_report.json, mining_report.csv and manifest.json.
/// Without `fp_class_id` the vocabulary's UPost class is used, or an "fp"
/// class is appended when the vocabulary has none.
MiningResult mine_upost(const dataset::DatasetManifest& manifest, const MatchConfig& config,
                        std::optional<int> fp_class_id, const std::filesystem::path& out_dir, std::size_t workers = 1);

}  // namespace ualp::mining
