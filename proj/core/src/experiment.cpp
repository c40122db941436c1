#include "ualp/experiment.hpp"

#include <cmath>

#include <json.hpp>

#include "ualp/error.hpp"
#include "ualp/label_io.hpp"
#include "ualp/label_sets.hpp"
#include "ualp/parallel.hpp"
#include "ualp/text_format.hpp"

namespace ualp::experiment {
namespace {

namespace fs = std::filesystem;
using dataset::LabelSetVariant;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kNote =
    "Simulated detectors on synthetic scenes. Scene and detector defaults are this toolkit's own choices; "
    "the numbers carry no clinical meaning.";

std::size_t count_fps(const dataset::DatasetManifest& manifest,
                      const std::vector<std::optional<std::vector<dataset::Detection>>>& predictions,
                      const std::vector<std::vector<dataset::GroundTruthObject>>& truths, mining::MatchConfig config) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < manifest.images.size(); ++i) {
    if (!predictions[i]) continue;
    total += mining::match_detections(*predictions[i], truths[i], config).fp_count();
  }
  return total;
}

}  // namespace

void ExperimentConfig::validate() const {
  scene.validate();
  detector.validate();
  mining.validate();
  for (double t : mined_count_thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::ConfigError, "mined-count thresholds must be in [0,1]");
  }
  if (mining_variant == LabelSetVariant::Full) {
    throw Error(ErrorCode::ConfigError, "the mining detector cannot already know the mined fp class");
  }
  if (evaluation.iou_thresholds.empty()) throw Error(ErrorCode::ConfigError, "at least one evaluation IoU threshold is needed");
  if (!(evaluation.entropy_floor >= 0.0 && evaluation.entropy_floor <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "entropy floor must be in [0,1]");
  }
  for (double iou : evaluation.iou_thresholds) {
    if (!(iou > 0.0 && iou <= 1.0)) throw Error(ErrorCode::ConfigError, "evaluation IoU thresholds must be in (0,1]");
  }
}

double VariantResult::sensitivity(double iou_threshold, double fppi) const {
  for (const auto& e : evaluation.per_iou) {
    if (e.iou_threshold != iou_threshold) continue;
    for (const auto& [target, value] : e.sensitivity) {
      if (target == fppi) return value;
    }
    return metrics::sensitivity_at_fppi(e.froc, fppi);
  }
  throw Error(ErrorCode::ConfigError, "no evaluation at IoU " + format_significant(iou_threshold));
}

double VariantResult::pr_auc(double iou_threshold) const {
  for (const auto& e : evaluation.per_iou) {
    if (e.iou_threshold == iou_threshold) return e.pr.auc;
  }
  throw Error(ErrorCode::ConfigError, "no evaluation at IoU " + format_significant(iou_threshold));
}

const VariantResult& ExperimentReport::variant(LabelSetVariant v) const {
  for (const auto& r : variants) {
    if (r.variant == v) return r;
  }
  throw Error(ErrorCode::ConfigError, "variant missing from report");
}

std::string ExperimentReport::to_json(const ExperimentConfig& config) const {
  ordered_json doc;
  doc["report"] = "ualp-experiment/1";
  doc["note"] = kNote;
  doc["seed"] = seed;
  const auto& s = config.scene;
  doc["scene"] = {{"image_size", s.image_size},
                  {"train_images", s.train_images},
                  {"val_images", s.val_images},
                  {"nodules_per_image", s.nodules_per_image},
                  {"confounders_per_image", s.confounders_per_image},
                  {"anatomy_jitter", s.anatomy_jitter}};
  doc["policy"] = {{"mining_variant", dataset::to_string(config.mining_variant)},
                   {"mining_iou_threshold", config.mining.iou_threshold},
                   {"mining_confidence_threshold", config.mining.confidence_threshold},
                   {"uprior_boxes", uprior_boxes},
                   {"missing_masks", missing_masks},
                   {"images_mined", images_mined},
                   {"mined_fp_count", mined_fp_count}};
  ordered_json variants_json = ordered_json::array();
  for (const auto& v : variants) {
    const auto summary = ordered_json::parse(metrics::summary_json(v.evaluation, config.evaluation));
    ordered_json row;
    row["variant"] = dataset::to_string(v.variant);
    row["vocabulary_size"] = v.vocabulary_size;
    row["sensitivity"] = summary["sensitivity"];
    row["pr_auc"] = summary["pr_auc"];
    if (v.evaluation.entropy.empty()) {
      row["entropy"] = nullptr;
    } else {
      row["entropy"] = {{"median", v.evaluation.entropy.median},
                        {"q1", v.evaluation.entropy.q1},
                        {"q3", v.evaluation.entropy.q3},
                        {"count", v.evaluation.entropy.count}};
    }
    ordered_json mined = ordered_json::object();
    for (const auto& [threshold, count] : v.mined_fp) mined[metrics::metric_key("conf", threshold)] = count;
    row["mined_fp"] = std::move(mined);
    variants_json.push_back(std::move(row));
  }
  doc["variants"] = std::move(variants_json);
  doc["curves"] = curve_files;
  return doc.dump(2) + "\n";
}

ExperimentReport run_policy_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
  config.validate();
  const std::size_t workers = config.workers;
  const std::uint64_t detector_seed = rng::derive(config.scene.seed, "detector");

  ExperimentReport report;
  report.seed = config.scene.seed;

  // Dataset with nodule labels, scenes and (optionally) anatomy masks.
  const auto generated = simulator::generate_dataset(config.scene, out_dir / "dataset", workers);

  // Anatomy labels from the masks.
  const auto mask_source = config.scene.write_masks ? dataset::directory_mask_provider(out_dir / "dataset" / "masks")
                                                    : simulator::scene_mask_provider(generated);
  const auto uprior = dataset::build_uprior(generated, mask_source, out_dir / "uprior", {config.components, workers});
  report.uprior_boxes = uprior.report.boxes_added;
  report.missing_masks = uprior.report.missing_masks;

  // Mining detector on the training split, then one mining pass.
  auto mining_profile = config.detector;
  mining_profile.variant = config.mining_variant;
  mining_profile.upost_learned = false;
  const auto mining_predictions =
      simulator::simulate_detector(mining_profile, uprior.manifest, detector_seed, dataset::Split::Train, workers);
  const auto mining_manifest = simulator::write_predictions(uprior.manifest, mining_predictions, out_dir / "mining_detector");
  const auto mined = mining::mine_upost(mining_manifest, config.mining, std::nullopt, out_dir / "upost", workers);
  report.images_mined = mined.report.images_processed;
  report.mined_fp_count = mined.report.fp_count;

  // Nodule truths for counting, indexed like the manifest.
  std::vector<std::vector<dataset::GroundTruthObject>> truths(generated.images.size());
  parallel_for(generated.images.size(), workers, [&](std::size_t i) {
    truths[i] = dataset::load_labels(generated.resolve(generated.images[i].labels), generated.vocabulary);
  });

  fs::create_directories(out_dir / "curves");
  for (LabelSetVariant variant : dataset::kAllVariants) {
    const std::string name(dataset::to_string(variant));
    const auto composed = dataset::compose(mined.manifest, variant, out_dir / "variants" / name, workers);

    auto profile = config.detector;
    profile.variant = variant;
    profile.upost_learned = variant == LabelSetVariant::Full && report.mined_fp_count > 0;

    VariantResult result;
    result.variant = variant;
    result.vocabulary_size = composed.remap.target.size();

    const auto train_predictions =
        simulator::simulate_detector(profile, generated, detector_seed, dataset::Split::Train, workers);
    for (double threshold : config.mined_count_thresholds) {
      auto count_config = config.mining;
      count_config.confidence_threshold = threshold;
      result.mined_fp.emplace_back(threshold, count_fps(generated, train_predictions, truths, count_config));
    }

    const auto val_predictions =
        simulator::simulate_detector(profile, generated, detector_seed, dataset::Split::Val, workers);
    const auto evaluated = simulator::write_predictions(generated, val_predictions, out_dir / "predictions" / name);
    const auto set = metrics::load_evaluation_set(evaluated, dataset::Split::Val);
    result.evaluation = metrics::evaluate(set, config.evaluation);

    for (const auto& e : result.evaluation.per_iou) {
      const std::string suffix = metrics::metric_key("iou", e.iou_threshold) + ".csv";
      const std::string froc_file = "curves/" + name + "_froc_" + suffix;
      const std::string pr_file = "curves/" + name + "_pr_" + suffix;
      write_text_file(out_dir / froc_file, metrics::froc_csv(e.froc));
      write_text_file(out_dir / pr_file, metrics::pr_csv(e.pr));
      report.curve_files.push_back(froc_file);
      report.curve_files.push_back(pr_file);
    }
    report.variants.push_back(std::move(result));
  }

  write_text_file(out_dir / "report.json", report.to_json(config));
  return report;
}

}  // namespace ualp::experiment
