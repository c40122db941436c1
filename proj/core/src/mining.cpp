#include "ualp/mining.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "ualp/error.hpp"
#include "ualp/label_io.hpp"
#include "ualp/parallel.hpp"
#include "ualp/text_format.hpp"

namespace ualp::mining {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using dataset::ClassRole;

}  // namespace

void MatchConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "iou_threshold must be in (0, 1], got " + format_significant(iou_threshold));
  }
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw Error(ErrorCode::ConfigError,
                "confidence_threshold must be in [0, 1], got " + format_significant(confidence_threshold));
  }
}

std::size_t MatchResult::tp_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(matches.begin(), matches.end(), [](const auto& m) { return m.verdict == Verdict::TP; }));
}

std::size_t MatchResult::fp_count() const noexcept { return matches.size() - tp_count(); }

bool processes_before(const Detection& a, const Detection& b) noexcept {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  const auto& ab = a.box;
  const auto& bb = b.box;
  if (ab.x_min() != bb.x_min()) return ab.x_min() < bb.x_min();
  if (ab.y_min() != bb.y_min()) return ab.y_min() < bb.y_min();
  if (ab.x_max() != bb.x_max()) return ab.x_max() < bb.x_max();
  return ab.y_max() < bb.y_max();
}

MatchResult match_detections(std::span<const Detection> detections, std::span<const GroundTruthObject> truths,
                             const MatchConfig& config) {
  config.validate();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto& d = detections[i];
    if (d.class_id == config.target_class_id && d.confidence >= config.confidence_threshold) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return processes_before(detections[a], detections[b]); });

  std::vector<std::size_t> truth_ids;
  std::vector<geometry::BBox> truth_boxes;
  for (std::size_t t = 0; t < truths.size(); ++t) {
    if (truths[t].class_id != config.target_class_id) continue;
    truth_ids.push_back(t);
    truth_boxes.push_back(truths[t].box.corners());
  }
  std::vector<bool> claimed(truth_ids.size(), false);

  MatchResult result;
  result.matches.reserve(order.size());
  for (std::size_t idx : order) {
    const auto& det = detections[idx];
    const auto box = det.box.corners();
    double best = -1.0;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < truth_ids.size(); ++k) {
      if (claimed[k]) continue;
      const double overlap = geometry::iou(box, truth_boxes[k]);
      if (overlap > best) {
        best = overlap;
        best_k = k;
      }
    }
    MatchedDetection m;
    m.detection_index = idx;
    m.confidence = det.confidence;
    if (best >= config.iou_threshold) {
      claimed[best_k] = true;
      m.verdict = Verdict::TP;
      m.truth_index = truth_ids[best_k];
      m.iou = best;
    } else {
      m.verdict = Verdict::FP;
      m.iou = std::max(best, 0.0);
    }
    result.matches.push_back(m);
  }
  return result;
}

std::string MiningReport::to_json() const {
  ordered_json doc;
  doc["images_processed"] = images_processed;
  doc["fp_count"] = fp_count;
  ordered_json hist = ordered_json::object();
  for (const auto& [fps, images] : histogram) hist[std::to_string(fps)] = images;
  doc["fp_per_image_histogram"] = std::move(hist);
  ordered_json per = ordered_json::object();
  for (const auto& [id, count] : per_image) per[id] = count;
  doc["per_image"] = std::move(per);
  return doc.dump(2) + "\n";
}

std::string MiningReport::to_csv() const {
  std::string out = "image_id,fp_count\n";
  for (const auto& [id, count] : per_image) out += id + "," + std::to_string(count) + "\n";
  return out;
}

std::vector<std::vector<Detection>> mine_false_positives(const dataset::DatasetManifest& manifest,
                                                         const MatchConfig& config, std::size_t workers) {
  config.validate();
  const auto train = manifest.images_in(dataset::Split::Train);
  std::vector<std::string> uncovered;
  for (const auto* image : train) {
    if (!image->predictions || !fs::is_regular_file(manifest.resolve(*image->predictions))) uncovered.push_back(image->id);
  }
  if (!uncovered.empty()) {
    std::string list;
    for (const auto& id : uncovered) list += (list.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::MissingPredictions, "no predictions for training images: " + list);
  }

  std::vector<std::vector<Detection>> mined(train.size());
  parallel_for(train.size(), workers, [&](std::size_t i) {
    const auto* image = train[i];
    const auto truths = dataset::load_labels(manifest.resolve(image->labels), manifest.vocabulary);
    const auto detections = dataset::load_predictions(manifest.resolve(*image->predictions), manifest.vocabulary);
    const auto result = match_detections(detections, truths, config);
    for (const auto& m : result.matches) {
      if (m.verdict == Verdict::FP) mined[i].push_back(detections[m.detection_index]);
    }
  });
  return mined;
}

MiningReport summarize_mining(const dataset::DatasetManifest& manifest,
                              const std::vector<std::vector<Detection>>& false_positives) {
  const auto train = manifest.images_in(dataset::Split::Train);
  MiningReport report;
  report.images_processed = train.size();
  for (std::size_t i = 0; i < train.size(); ++i) {
    const std::size_t count = i < false_positives.size() ? false_positives[i].size() : 0;
    report.fp_count += count;
    report.per_image.emplace_back(train[i]->id, count);
    ++report.histogram[count];
  }
  return report;
}

MiningResult mine_upost(const dataset::DatasetManifest& manifest, const MatchConfig& config,
                        std::optional<int> fp_class_id, const fs::path& out_dir, std::size_t workers) {
  MiningResult result;
  result.manifest = dataset::rebase_manifest(manifest, out_dir);

  if (fp_class_id) {
    if (manifest.vocabulary.at(*fp_class_id).role != ClassRole::UPost) {
      throw Error(ErrorCode::ConfigError, "class " + std::to_string(*fp_class_id) + " is not a mined-confounder class");
    }
    result.fp_class_id = *fp_class_id;
  } else if (auto existing = manifest.vocabulary.first_with_role(ClassRole::UPost)) {
    result.fp_class_id = *existing;
  } else {
    auto entries = manifest.vocabulary.entries();
    result.fp_class_id = static_cast<int>(entries.size());
    entries.push_back({result.fp_class_id, "fp", ClassRole::UPost});
    result.manifest.vocabulary = dataset::ClassVocabulary(std::move(entries));
  }

  const auto mined = mine_false_positives(manifest, config, workers);
  result.report = summarize_mining(manifest, mined);

  fs::create_directories(out_dir / "upost");
  fs::create_directories(out_dir / "labels");
  const auto train = manifest.images_in(dataset::Split::Train);
  parallel_for(train.size(), workers, [&](std::size_t i) {
    const auto* image = train[i];
    std::vector<GroundTruthObject> upost;
    upost.reserve(mined[i].size());
    for (const auto& det : mined[i]) upost.push_back({result.fp_class_id, det.box});
    const std::string upost_text = dataset::encode_labels(upost);
    write_text_file(out_dir / "upost" / (image->id + ".txt"), upost_text);

    std::string merged;
    const std::string existing = read_text_file(manifest.resolve(image->labels));
    for (auto line : split_lines(existing)) {
      const auto id = dataset::leading_class_id(line);
      if (!id) continue;
      if (manifest.vocabulary.contains(*id) && manifest.vocabulary.at(*id).role == ClassRole::UPost) continue;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      merged.append(line);
      merged += '\n';
    }
    merged += upost_text;
    write_text_file(out_dir / "labels" / (image->id + ".txt"), merged);
  });

  for (const auto& image : manifest.images) {
    if (image.split == dataset::Split::Train) continue;
    write_text_file(out_dir / "labels" / (image.id + ".txt"), read_text_file(manifest.resolve(image.labels)));
  }
  for (auto& image : result.manifest.images) image.labels = "labels/" + image.id + ".txt";
  write_text_file(out_dir / "mining_report.json", result.report.to_json());
  write_text_file(out_dir / "mining_report.csv", result.report.to_csv());
  dataset::write_manifest(result.manifest, out_dir / "manifest.json");
  return result;
}

}  // namespace ualp::mining
