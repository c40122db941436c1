#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ualp/dataset.hpp"
#include "ualp/manifest.hpp"

namespace ualp::metrics {

using dataset::Detection;
using dataset::GroundTruthObject;

/// Truths and predictions of one image, all classes.
struct ImageEvaluation {
  std::string image_id;
  std::vector<GroundTruthObject> truths;
  std::vector<Detection> detections;
};

using EvaluationSet = std::vector<ImageEvaluation>;

/// Reads labels and predictions of every image in `split`. Throws
/// Error(EmptySplit) when the split has no images and
/// Error(MissingPredictions) when an image has no prediction file.
EvaluationSet load_evaluation_set(const dataset::DatasetManifest& manifest, dataset::Split split);

enum class LogBase { Natural, Two };

/// Binary entropy -(p log p + (1-p) log(1-p)) with 0 log 0 = 0.
/// Throws Error(DomainError) outside [0,1].
double entropy(double p, LogBase base = LogBase::Natural);

struct CurvePoint {
  double x = 0.0;  // FPPI (FROC) or recall (PR)
  double y = 0.0;  // sensitivity (FROC) or precision (PR)
  double threshold = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
};

struct FrocCurve {
  std::vector<CurvePoint> points;
  double iou_threshold = 0.0;
  std::size_t image_count = 0;
  std::size_t truth_count = 0;
};

struct PrCurve {
  std::vector<CurvePoint> points;
  double iou_threshold = 0.0;
  std::size_t image_count = 0;
  std::size_t truth_count = 0;
  double auc = 0.0;
};

/// Threshold of the leading (0 detections) operating point.
double leading_threshold() noexcept;

/// Operating points at every distinct target-class confidence, highest
/// first, preceded by the empty operating point. Throws Error(EmptySplit).
FrocCurve froc_curve(const EvaluationSet& set, double iou_threshold, int target_class = 0);
PrCurve pr_curve(const EvaluationSet& set, double iou_threshold, int target_class = 0);

/// Trapezoid over the points in recall order.
double pr_auc(std::span<const CurvePoint> points);

/// Highest sensitivity reached at or below `target_fppi`; 0 if none.
double sensitivity_at_fppi(const FrocCurve& curve, double target_fppi);

/// Trapezoid area over [0, fppi_cap] of the curve extended horizontally to
/// the cap, divided by the cap.
double froc_auc(const FrocCurve& curve, double fppi_cap);

struct EntropySummary {
  std::vector<double> entropies;  // in selection order
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  LogBase base = LogBase::Natural;

  bool empty() const noexcept { return count == 0; }
};

/// Order statistic at floor((n-1) * q) of an ascending sample; q = 0.5
/// gives the lower median.
double lower_quantile(std::span<const double> sorted, double q);

EntropySummary summarize_entropies(std::vector<double> entropies, LogBase base);

/// Entropy of every `class_id` prediction with confidence >= floor. An
/// empty selection yields a summary with count 0.
EntropySummary entropy_summary(const EvaluationSet& set, int class_id, double confidence_floor,
                               LogBase base = LogBase::Natural);

std::string froc_csv(const FrocCurve& curve);
std::string pr_csv(const PrCurve& curve);

struct EvaluationSettings {
  std::vector<double> iou_thresholds{0.2, 0.5};
  std::vector<double> fppi_targets{0.5, 1.0, 2.0, 5.0};
  double entropy_floor = 0.25;
  LogBase log_base = LogBase::Natural;
  int target_class = 0;
};

struct IouEvaluation {
  double iou_threshold = 0.0;
  FrocCurve froc;
  PrCurve pr;
  std::vector<std::pair<double, double>> sensitivity;  // (fppi target, sensitivity)
};

struct EvaluationSummary {
  std::size_t image_count = 0;
  std::size_t truth_count = 0;
  std::vector<IouEvaluation> per_iou;
  EntropySummary entropy;
};

EvaluationSummary evaluate(const EvaluationSet& set, const EvaluationSettings& settings);

/// Key used in reports for a numeric setting, e.g. "iou_0.2", "fppi_2".
std::string metric_key(const char* prefix, double value);

std::string summary_json(const EvaluationSummary& summary, const EvaluationSettings& settings);

}  // namespace ualp::metrics
