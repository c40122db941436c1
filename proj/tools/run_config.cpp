#include "run_config.hpp"

#include <set>

#include "ualp/dataset.hpp"
#include "ualp/error.hpp"

namespace ualp::cli {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Reads known keys of one JSON object and complains about anything else.
class Section {
 public:
  Section(const json& node, std::string name) : node_(node), name_(std::move(name)) {
    if (!node_.is_object()) throw Error(ErrorCode::ConfigError, "config: '" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    try {
      target = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::ConfigError, "config: '" + name_ + "." + key + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return node_.contains(key) ? &node_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw Error(ErrorCode::ConfigError, "config: unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  const json& node_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_confidence(const json& node, const std::string& name, simulator::ConfidenceModel& m) {
  Section s(node, name);
  s.read("lo", m.lo);
  s.read("hi", m.hi);
  s.read("a", m.a);
  s.read("b", m.b);
  s.finish();
}

ordered_json confidence_json(const simulator::ConfidenceModel& m) {
  return {{"lo", m.lo}, {"hi", m.hi}, {"a", m.a}, {"b", m.b}};
}

}  // namespace

void apply_config(RunConfig& config, const json& doc) {
  Section root(doc, "root");
  root.read("workers", config.workers);
  root.read("verbosity", config.verbosity);

  if (const auto* node = root.child("paths")) {
    Section s(*node, "paths");
    s.read("manifest", config.manifest);
    s.read("masks", config.masks);
    s.read("out", config.out);
    s.finish();
  }
  if (const auto* node = root.child("match")) {
    Section s(*node, "match");
    s.read("iou_threshold", config.match.iou_threshold);
    s.read("confidence_threshold", config.match.confidence_threshold);
    s.read("target_class_id", config.match.target_class_id);
    s.read("fp_class_id", config.fp_class_id);
    s.read("mining_variant", config.mining_variant);
    s.finish();
  }
  if (const auto* node = root.child("metrics")) {
    Section s(*node, "metrics");
    s.read("iou_thresholds", config.metrics.iou_thresholds);
    s.read("fppi_targets", config.metrics.fppi_targets);
    s.read("entropy_floor", config.metrics.entropy_floor);
    s.read("split", config.split);
    std::string base = config.metrics.log_base == metrics::LogBase::Natural ? "e" : "2";
    s.read("log_base", base);
    if (base != "e" && base != "2") throw Error(ErrorCode::ConfigError, "config: metrics.log_base must be \"e\" or \"2\"");
    config.metrics.log_base = base == "e" ? metrics::LogBase::Natural : metrics::LogBase::Two;
    s.finish();
  }
  if (const auto* node = root.child("geometry")) {
    Section s(*node, "geometry");
    int connectivity = static_cast<int>(config.components.connectivity);
    s.read("connectivity", connectivity);
    if (connectivity != 4 && connectivity != 8) throw Error(ErrorCode::ConfigError, "config: geometry.connectivity must be 4 or 8");
    config.components.connectivity = connectivity == 4 ? geometry::Connectivity::Four : geometry::Connectivity::Eight;
    s.read("min_area", config.components.min_area);
    s.finish();
  }
  if (const auto* node = root.child("scene")) {
    Section s(*node, "scene");
    auto& sc = config.scene;
    s.read("image_size", sc.image_size);
    s.read("train_images", sc.train_images);
    s.read("val_images", sc.val_images);
    s.read("nodules_per_image", sc.nodules_per_image);
    s.read("confounders_per_image", sc.confounders_per_image);
    s.read("anatomy_jitter", sc.anatomy_jitter);
    s.read("seed", sc.seed);
    s.read("write_masks", sc.write_masks);
    std::vector<double> range;
    if (const auto* r = s.child("nodule_size")) {
      range = r->get<std::vector<double>>();
      if (range.size() != 2) throw Error(ErrorCode::ConfigError, "config: scene.nodule_size must be [min, max]");
      sc.nodule_size = {range[0], range[1]};
    }
    if (const auto* r = s.child("confounder_size")) {
      range = r->get<std::vector<double>>();
      if (range.size() != 2) throw Error(ErrorCode::ConfigError, "config: scene.confounder_size must be [min, max]");
      sc.confounder_size = {range[0], range[1]};
    }
    s.finish();
  }
  if (const auto* node = root.child("detector")) {
    Section s(*node, "detector");
    auto& p = config.profile;
    s.read("nodule_hit_rate", p.nodule_hit_rate);
    s.read("anatomy_hit_rate", p.anatomy_hit_rate);
    s.read("fp_class_hit_rate", p.fp_class_hit_rate);
    s.read("confusion_probability", p.confusion_probability);
    s.read("background_fp_rate", p.background_fp_rate);
    s.read("box_jitter", p.box_jitter);
    if (const auto* m = s.child("hit_confidence")) read_confidence(*m, "detector.hit_confidence", p.hit_confidence);
    if (const auto* m = s.child("confusion_confidence")) read_confidence(*m, "detector.confusion_confidence", p.confusion_confidence);
    if (const auto* m = s.child("background_confidence")) read_confidence(*m, "detector.background_confidence", p.background_confidence);
    s.finish();
  }
  root.finish();
}

ordered_json to_json(const RunConfig& c) {
  ordered_json doc;
  doc["paths"] = {{"manifest", c.manifest}, {"masks", c.masks}, {"out", c.out}};
  doc["match"] = {{"iou_threshold", c.match.iou_threshold},
                  {"confidence_threshold", c.match.confidence_threshold},
                  {"target_class_id", c.match.target_class_id},
                  {"fp_class_id", c.fp_class_id},
                  {"mining_variant", c.mining_variant}};
  doc["metrics"] = {{"iou_thresholds", c.metrics.iou_thresholds},
                    {"fppi_targets", c.metrics.fppi_targets},
                    {"entropy_floor", c.metrics.entropy_floor},
                    {"log_base", c.metrics.log_base == metrics::LogBase::Natural ? "e" : "2"},
                    {"split", c.split}};
  doc["geometry"] = {{"connectivity", static_cast<int>(c.components.connectivity)}, {"min_area", c.components.min_area}};
  const auto& sc = c.scene;
  doc["scene"] = {{"image_size", sc.image_size},
                  {"train_images", sc.train_images},
                  {"val_images", sc.val_images},
                  {"nodules_per_image", sc.nodules_per_image},
                  {"confounders_per_image", sc.confounders_per_image},
                  {"anatomy_jitter", sc.anatomy_jitter},
                  {"nodule_size", {sc.nodule_size.min_px, sc.nodule_size.max_px}},
                  {"confounder_size", {sc.confounder_size.min_px, sc.confounder_size.max_px}},
                  {"seed", sc.seed},
                  {"write_masks", sc.write_masks}};
  const auto& p = c.profile;
  doc["detector"] = {{"nodule_hit_rate", p.nodule_hit_rate},
                     {"anatomy_hit_rate", p.anatomy_hit_rate},
                     {"fp_class_hit_rate", p.fp_class_hit_rate},
                     {"confusion_probability", p.confusion_probability},
                     {"background_fp_rate", p.background_fp_rate},
                     {"box_jitter", p.box_jitter},
                     {"hit_confidence", confidence_json(p.hit_confidence)},
                     {"confusion_confidence", confidence_json(p.confusion_confidence)},
                     {"background_confidence", confidence_json(p.background_confidence)}};
  doc["options"] = {{"split", c.split},     {"variant", c.variant},         {"mode", c.mode},
                    {"class_id", c.class_id}, {"from_scenes", c.from_scenes}, {"detector", c.detector},
                    {"upost_learned", c.upost_learned}};
  return doc;
}

experiment::ExperimentConfig experiment_config(const RunConfig& c) {
  experiment::ExperimentConfig e;
  e.scene = c.scene;
  e.detector = c.profile;
  e.mining = c.match;
  e.mining_variant = dataset::parse_variant(c.mining_variant);
  e.evaluation = c.metrics;
  e.components = c.components;
  e.workers = c.workers;
  return e;
}

}  // namespace ualp::cli
