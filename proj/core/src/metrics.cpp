#include "ualp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "ualp/error.hpp"
#include "ualp/label_io.hpp"
#include "ualp/mining.hpp"
#include "ualp/text_format.hpp"

namespace ualp::metrics {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct Scored {
  double confidence;
  bool tp;
};

struct Sweep {
  std::vector<CurvePoint> points;  // x/y left for the caller; tp/fp/threshold filled
  std::size_t image_count = 0;
  std::size_t truth_count = 0;
};

// One greedy pass per image at the lowest threshold is enough: detections
// are processed in descending confidence, so the retained set at any
// threshold is a prefix of that order and earlier verdicts never change.
Sweep sweep(const EvaluationSet& set, double iou_threshold, int target_class) {
  if (set.empty()) throw Error(ErrorCode::EmptySplit, "evaluation split has no images");
  mining::MatchConfig config{iou_threshold, 0.0, target_class};
  Sweep out;
  out.image_count = set.size();
  std::vector<Scored> scored;
  for (const auto& image : set) {
    out.truth_count += static_cast<std::size_t>(std::count_if(
        image.truths.begin(), image.truths.end(), [&](const auto& t) { return t.class_id == target_class; }));
    const auto result = mining::match_detections(image.detections, image.truths, config);
    for (const auto& m : result.matches) scored.push_back({m.confidence, m.verdict == mining::Verdict::TP});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.confidence > b.confidence; });

  out.points.push_back({0.0, 0.0, leading_threshold(), 0, 0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < scored.size();) {
    const double threshold = scored[i].confidence;
    for (; i < scored.size() && scored[i].confidence == threshold; ++i) {
      (scored[i].tp ? tp : fp) += 1;
    }
    out.points.push_back({0.0, 0.0, threshold, tp, fp});
  }
  return out;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ordered_json entropy_json(const EntropySummary& s, const EvaluationSettings& settings) {
  if (s.empty()) return nullptr;
  ordered_json doc;
  doc["log_base"] = settings.log_base == LogBase::Natural ? "e" : "2";
  doc["confidence_floor"] = settings.entropy_floor;
  doc["count"] = s.count;
  doc["min"] = s.min;
  doc["q1"] = s.q1;
  doc["median"] = s.median;
  doc["q3"] = s.q3;
  doc["max"] = s.max;
  return doc;
}

}  // namespace

EvaluationSet load_evaluation_set(const dataset::DatasetManifest& manifest, dataset::Split split) {
  const auto images = manifest.images_in(split);
  if (images.empty()) {
    throw Error(ErrorCode::EmptySplit, "split '" + std::string(dataset::to_string(split)) + "' has no images");
  }
  EvaluationSet set;
  set.reserve(images.size());
  for (const auto* image : images) {
    if (!image->predictions) throw Error(ErrorCode::MissingPredictions, "image " + image->id + " has no predictions");
    ImageEvaluation eval;
    eval.image_id = image->id;
    eval.truths = dataset::load_labels(manifest.resolve(image->labels), manifest.vocabulary);
    eval.detections = dataset::load_predictions(manifest.resolve(*image->predictions), manifest.vocabulary);
    set.push_back(std::move(eval));
  }
  return set;
}

double entropy(double p, LogBase base) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::DomainError, "entropy needs a probability in [0,1], got " + format_significant(p));
  }
  const auto term = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  const double nats = -(term(p) + term(1.0 - p));
  return base == LogBase::Natural ? nats : nats / std::numbers::ln2;
}

double leading_threshold() noexcept { return std::nextafter(1.0, 2.0); }

FrocCurve froc_curve(const EvaluationSet& set, double iou_threshold, int target_class) {
  auto s = sweep(set, iou_threshold, target_class);
  FrocCurve curve;
  curve.iou_threshold = iou_threshold;
  curve.image_count = s.image_count;
  curve.truth_count = s.truth_count;
  curve.points = std::move(s.points);
  for (auto& p : curve.points) {
    p.x = static_cast<double>(p.fp) / static_cast<double>(curve.image_count);
    p.y = ratio(p.tp, curve.truth_count);
  }
  return curve;
}

PrCurve pr_curve(const EvaluationSet& set, double iou_threshold, int target_class) {
  auto s = sweep(set, iou_threshold, target_class);
  PrCurve curve;
  curve.iou_threshold = iou_threshold;
  curve.image_count = s.image_count;
  curve.truth_count = s.truth_count;
  curve.points = std::move(s.points);
  for (auto& p : curve.points) {
    p.x = ratio(p.tp, curve.truth_count);
    p.y = p.tp + p.fp == 0 ? 1.0 : ratio(p.tp, p.tp + p.fp);
  }
  curve.auc = pr_auc(curve.points);
  return curve;
}

double pr_auc(std::span<const CurvePoint> points) {
  std::vector<CurvePoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
  double area = 0.0;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    area += (sorted[i].x - sorted[i - 1].x) * (sorted[i].y + sorted[i - 1].y) / 2.0;
  }
  return area;
}

double sensitivity_at_fppi(const FrocCurve& curve, double target_fppi) {
  double best = 0.0;
  for (const auto& p : curve.points) {
    if (p.x <= target_fppi) best = std::max(best, p.y);
  }
  return best;
}

double froc_auc(const FrocCurve& curve, double fppi_cap) {
  if (curve.points.empty() || !(fppi_cap > 0.0)) return 0.0;
  double area = 0.0;
  double px = curve.points.front().x;
  double py = curve.points.front().y;
  for (std::size_t i = 1; i < curve.points.size() && px < fppi_cap; ++i) {
    const double cx = curve.points[i].x;
    const double cy = curve.points[i].y;
    if (cx > fppi_cap) {
      const double y_cap = py + (cy - py) * (fppi_cap - px) / (cx - px);
      area += (fppi_cap - px) * (py + y_cap) / 2.0;
      px = fppi_cap;
      py = y_cap;
      break;
    }
    area += (cx - px) * (py + cy) / 2.0;
    px = cx;
    py = cy;
  }
  if (px < fppi_cap) area += (fppi_cap - px) * py;
  return area / fppi_cap;
}

double lower_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(sorted.size() - 1) * q));
  return sorted[std::min(idx, sorted.size() - 1)];
}

EntropySummary summarize_entropies(std::vector<double> entropies, LogBase base) {
  EntropySummary s;
  s.base = base;
  s.count = entropies.size();
  s.entropies = std::move(entropies);
  if (s.count == 0) return s;
  std::vector<double> sorted = s.entropies;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = lower_quantile(sorted, 0.25);
  s.median = lower_quantile(sorted, 0.5);
  s.q3 = lower_quantile(sorted, 0.75);
  return s;
}

EntropySummary entropy_summary(const EvaluationSet& set, int class_id, double confidence_floor, LogBase base) {
  std::vector<double> values;
  for (const auto& image : set) {
    for (const auto& d : image.detections) {
      if (d.class_id == class_id && d.confidence >= confidence_floor) values.push_back(entropy(d.confidence, base));
    }
  }
  return summarize_entropies(std::move(values), base);
}

std::string froc_csv(const FrocCurve& curve) {
  std::string out = "threshold,fppi,sensitivity\n";
  for (const auto& p : curve.points) {
    out += format_significant(p.threshold) + "," + format_significant(p.x) + "," + format_significant(p.y) + "\n";
  }
  return out;
}

std::string pr_csv(const PrCurve& curve) {
  std::string out = "threshold,recall,precision\n";
  for (const auto& p : curve.points) {
    out += format_significant(p.threshold) + "," + format_significant(p.x) + "," + format_significant(p.y) + "\n";
  }
  return out;
}

EvaluationSummary evaluate(const EvaluationSet& set, const EvaluationSettings& settings) {
  EvaluationSummary summary;
  for (double iou : settings.iou_thresholds) {
    IouEvaluation e;
    e.iou_threshold = iou;
    e.froc = froc_curve(set, iou, settings.target_class);
    e.pr = pr_curve(set, iou, settings.target_class);
    for (double target : settings.fppi_targets) e.sensitivity.emplace_back(target, sensitivity_at_fppi(e.froc, target));
    summary.image_count = e.froc.image_count;
    summary.truth_count = e.froc.truth_count;
    summary.per_iou.push_back(std::move(e));
  }
  summary.entropy = entropy_summary(set, settings.target_class, settings.entropy_floor, settings.log_base);
  return summary;
}

std::string metric_key(const char* prefix, double value) {
  return std::string(prefix) + "_" + format_significant(value, 6);
}

std::string summary_json(const EvaluationSummary& summary, const EvaluationSettings& settings) {
  ordered_json doc;
  doc["images"] = summary.image_count;
  doc["truths"] = summary.truth_count;
  ordered_json sens = ordered_json::object();
  ordered_json auc = ordered_json::object();
  for (const auto& e : summary.per_iou) {
    ordered_json row = ordered_json::object();
    for (const auto& [target, value] : e.sensitivity) row[metric_key("fppi", target)] = value;
    sens[metric_key("iou", e.iou_threshold)] = std::move(row);
    auc[metric_key("iou", e.iou_threshold)] = e.pr.auc;
  }
  doc["sensitivity"] = std::move(sens);
  doc["pr_auc"] = std::move(auc);
  doc["entropy"] = entropy_json(summary.entropy, settings);
  return doc.dump(2) + "\n";
}

}  // namespace ualp::metrics
