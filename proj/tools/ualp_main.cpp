// ualp: command-line front end for the label-set pipeline, evaluation and simulator.

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "run_config.hpp"
#include "ualp/error.hpp"
#include "ualp/experiment.hpp"
#include "ualp/label_io.hpp"
#include "ualp/label_sets.hpp"
#include "ualp/manifest.hpp"
#include "ualp/metrics.hpp"
#include "ualp/mining.hpp"
#include "ualp/parallel.hpp"
#include "ualp/pgm.hpp"
#include "ualp/simulator.hpp"
#include "ualp/text_format.hpp"

namespace {

namespace fs = std::filesystem;
using ualp::Error;
using ualp::ErrorCode;
using ualp::cli::RunConfig;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitConfig = 3;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::ParseError: return kExitIo;
    case ErrorCode::ConfigError: return kExitConfig;
    default: return kExitValidation;
  }
}

using Override = std::function<void(RunConfig&)>;

template <typename T, typename Setter>
CLI::Option* add_override(CLI::App* app, std::vector<Override>& overrides, const std::string& name,
                          const std::string& help, Setter setter) {
  auto value = std::make_shared<T>();
  CLI::Option* opt = app->add_option(name, *value, help);
  overrides.push_back([value, opt, setter](RunConfig& c) {
    if (opt->count() > 0) setter(c, *value);
  });
  return opt;
}

CLI::Option* add_switch(CLI::App* app, std::vector<Override>& overrides, const std::string& name,
                        const std::string& help, std::function<void(RunConfig&)> setter) {
  CLI::Option* opt = app->add_flag(name, help);
  overrides.push_back([opt, setter](RunConfig& c) {
    if (opt->count() > 0) setter(c);
  });
  return opt;
}

// Output goes to a sibling "<out>.partial" directory that replaces <out>
// only on commit(); relative paths written inside stay valid after the rename.
class StagedOutput {
 public:
  explicit StagedOutput(const std::string& out) {
    if (out.empty()) throw Error(ErrorCode::ConfigError, "--out is required");
    final_ = fs::absolute(fs::path(out)).lexically_normal();
    if (final_.filename().empty()) final_ = final_.parent_path();
    staging_ = final_.parent_path() / (final_.filename().string() + ".partial");
    std::error_code ec;
    fs::remove_all(staging_, ec);
    fs::create_directories(staging_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + staging_.string() + ": " + ec.message());
  }
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;
  ~StagedOutput() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  const fs::path& path() const { return staging_; }
  const fs::path& final_path() const { return final_; }

  void commit() {
    std::error_code ec;
    fs::remove_all(final_, ec);
    fs::rename(staging_, final_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot move output into " + final_.string() + ": " + ec.message());
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path staging_;
  bool committed_ = false;
};

class RunMetadata {
 public:
  RunMetadata(std::string subcommand, const RunConfig& config) : subcommand_(std::move(subcommand)), config_(config) {}

  void add_file(const fs::path& path) {
    const std::string bytes = ualp::read_text_file(path);
    inputs_.push_back({{"path", path.lexically_normal().generic_string()}, {"sha256", ualp::sha256_hex(bytes)}});
  }

  void add_manifest(const fs::path& manifest_path, const ualp::dataset::DatasetManifest& manifest) {
    add_file(manifest_path);
    for (const auto& image : manifest.images) {
      add_file(manifest.resolve(image.labels));
      if (image.predictions) add_file(manifest.resolve(*image.predictions));
      if (image.scene) add_file(manifest.resolve(*image.scene));
      for (const auto& [structure, path] : image.masks) add_file(manifest.resolve(path));
    }
  }

  void write(const fs::path& dir) const {
    ordered_json doc;
    doc["tool"] = "ualp";
    doc["version"] = UALP_VERSION;
    doc["subcommand"] = subcommand_;
    doc["config"] = ualp::cli::to_json(config_);
    doc["inputs"] = inputs_;
    ualp::write_text_file(dir / "run.json", doc.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  const RunConfig& config_;
  ordered_json inputs_ = ordered_json::array();
};

std::vector<fs::path> pgm_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "mask directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

ualp::dataset::DatasetManifest require_manifest(const RunConfig& c) {
  if (c.manifest.empty()) throw Error(ErrorCode::ConfigError, "--manifest is required");
  return ualp::dataset::load_manifest(c.manifest);
}

int run_validate(const RunConfig& c) {
  if (c.manifest.empty()) throw Error(ErrorCode::ConfigError, "--manifest is required");
  const auto manifest = ualp::dataset::read_manifest(c.manifest);
  const auto report = ualp::dataset::validate_manifest(manifest);
  std::cout << report.to_text();
  std::cout << manifest.images.size() << " images, " << report.findings.size() << " findings\n";
  return report.has_errors() ? kExitValidation : kExitOk;
}

int run_extract(const RunConfig& c) {
  if (c.masks.empty()) throw Error(ErrorCode::ConfigError, "--masks is required");
  if (c.mode != "global" && c.mode != "components") {
    throw Error(ErrorCode::ConfigError, "--mode must be 'global' or 'components'");
  }
  const auto files = pgm_files(c.masks);
  StagedOutput out(c.out);
  RunMetadata meta("extract-bboxes", c);
  if (files.empty()) std::cerr << "warning: no .pgm masks in " << c.masks << "\n";
  std::size_t boxes = 0;
  for (const auto& file : files) {
    meta.add_file(file);
    const auto mask = ualp::geometry::read_pgm(file);
    std::vector<ualp::dataset::GroundTruthObject> objects;
    const double w = static_cast<double>(mask.width());
    const double h = static_cast<double>(mask.height());
    if (c.mode == "global") {
      if (mask.foreground_count() == 0) {
        std::cerr << "warning: " << file.string() << " has no foreground; writing an empty label file\n";
      } else {
        objects.push_back({c.class_id, ualp::geometry::normalize(ualp::geometry::bbox_from_mask(mask), w, h)});
      }
    } else {
      for (const auto& box : ualp::geometry::components_from_mask(mask, c.components)) {
        objects.push_back({c.class_id, ualp::geometry::normalize(box, w, h)});
      }
    }
    boxes += objects.size();
    ualp::dataset::save_labels(objects, out.path() / (file.stem().string() + ".txt"));
  }
  meta.write(out.path());
  out.commit();
  std::cout << "extract-bboxes: " << files.size() << " masks, " << boxes << " boxes -> " << out.final_path().string()
            << "\n";
  return kExitOk;
}

int run_build_uprior(const RunConfig& c) {
  const auto manifest = require_manifest(c);
  if (c.masks.empty() && !c.from_scenes) throw Error(ErrorCode::ConfigError, "--masks or --from-scenes is required");
  StagedOutput out(c.out);
  RunMetadata meta("build-uprior", c);
  meta.add_manifest(c.manifest, manifest);
  if (!c.from_scenes) {
    for (const auto& f : pgm_files(c.masks)) meta.add_file(f);
  }
  const auto provider = c.from_scenes ? ualp::simulator::scene_mask_provider(manifest)
                                      : ualp::dataset::directory_mask_provider(c.masks);
  const auto result = ualp::dataset::build_uprior(manifest, provider, out.path(), {c.components, c.workers});
  meta.write(out.path());
  out.commit();
  std::cout << "build-uprior: " << result.report.images << " images, " << result.report.boxes_added
            << " anatomy boxes, " << result.report.missing_masks << " missing masks\n";
  if (c.verbosity > 0) {
    for (const auto& [id, n] : result.report.missing_per_image) std::cerr << "warning: " << id << ": " << n << " masks missing\n";
  }
  return kExitOk;
}

int run_mine(const RunConfig& c) {
  const auto manifest = require_manifest(c);
  StagedOutput out(c.out);
  RunMetadata meta("mine-upost", c);
  meta.add_manifest(c.manifest, manifest);
  const std::optional<int> fp_class = c.fp_class_id >= 0 ? std::optional<int>(c.fp_class_id) : std::nullopt;
  const auto result = ualp::mining::mine_upost(manifest, c.match, fp_class, out.path(), c.workers);
  meta.write(out.path());
  out.commit();
  std::cout << "mine-upost: " << result.report.images_processed << " training images, " << result.report.fp_count
            << " false positives mined as class " << result.fp_class_id << "\n";
  return kExitOk;
}

int run_compose(const RunConfig& c) {
  const auto variant = ualp::dataset::parse_variant(c.variant);
  const auto manifest = require_manifest(c);
  StagedOutput out(c.out);
  RunMetadata meta("compose", c);
  meta.add_manifest(c.manifest, manifest);
  const auto result = ualp::dataset::compose(manifest, variant, out.path(), c.workers);
  meta.write(out.path());
  out.commit();
  std::cout << "compose: " << c.variant << ", " << result.remap.target.size() << " classes\n";
  return kExitOk;
}

int run_evaluate(const RunConfig& c) {
  const auto split = ualp::dataset::parse_split(c.split);
  const auto manifest = require_manifest(c);
  StagedOutput out(c.out);
  RunMetadata meta("evaluate", c);
  meta.add_manifest(c.manifest, manifest);
  const auto set = ualp::metrics::load_evaluation_set(manifest, split);
  const auto summary = ualp::metrics::evaluate(set, c.metrics);
  fs::create_directories(out.path() / "curves");
  for (const auto& e : summary.per_iou) {
    const std::string suffix = ualp::metrics::metric_key("iou", e.iou_threshold) + ".csv";
    ualp::write_text_file(out.path() / "curves" / ("froc_" + suffix), ualp::metrics::froc_csv(e.froc));
    ualp::write_text_file(out.path() / "curves" / ("pr_" + suffix), ualp::metrics::pr_csv(e.pr));
  }
  const std::string json = ualp::metrics::summary_json(summary, c.metrics);
  ualp::write_text_file(out.path() / "summary.json", json);
  meta.write(out.path());
  out.commit();
  std::cout << json;
  if (summary.entropy.empty()) std::cerr << "warning: EmptySelection: no predictions above the entropy floor\n";
  return kExitOk;
}

int run_simulate(const RunConfig& c) {
  StagedOutput out(c.out);
  RunMetadata meta("simulate", c);
  auto manifest = ualp::simulator::generate_dataset(c.scene, out.path(), c.workers);
  if (!c.detector.empty()) {
    auto profile = c.profile;
    profile.variant = ualp::dataset::parse_variant(c.detector);
    profile.upost_learned = c.upost_learned;
    const auto seed = ualp::rng::derive(c.scene.seed, "detector");
    const auto predictions = ualp::simulator::simulate_detector(profile, manifest, seed, std::nullopt, c.workers);
    manifest = ualp::simulator::write_predictions(manifest, predictions, out.path());
  }
  meta.write(out.path());
  out.commit();
  std::cout << "simulate: " << manifest.images.size() << " images -> " << out.final_path().string() << "\n";
  return kExitOk;
}

int run_experiment(const RunConfig& c) {
  const auto config = ualp::cli::experiment_config(c);
  StagedOutput out(c.out);
  RunMetadata meta("experiment", c);
  const auto report = ualp::experiment::run_policy_experiment(config, out.path());
  meta.write(out.path());
  out.commit();
  std::cout << ualp::read_text_file(out.final_path() / "report.json");
  (void)report;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ualp: anatomy/false-positive label sets, detector evaluation and a seeded policy simulator"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 1 I/O, 2 validation, 3 configuration.");

  std::vector<Override> overrides;
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration; flags override its values");
  add_override<std::size_t>(&app, overrides, "--workers", "Worker threads (default: available cores)",
                            [](RunConfig& c, std::size_t v) { c.workers = v; });
  add_switch(&app, overrides, "-v,--verbose", "Print per-image warnings", [](RunConfig& c) { c.verbosity = 1; });

  auto manifest_opt = [&](CLI::App* sub) {
    add_override<std::string>(sub, overrides, "--manifest", "Dataset manifest (JSON)",
                              [](RunConfig& c, const std::string& v) { c.manifest = v; });
  };
  auto out_opt = [&](CLI::App* sub) {
    add_override<std::string>(sub, overrides, "--out", "Output directory (replaced atomically)",
                              [](RunConfig& c, const std::string& v) { c.out = v; });
  };
  auto geometry_opts = [&](CLI::App* sub) {
    add_override<int>(sub, overrides, "--connectivity", "Component connectivity, 4 or 8 (default 8)",
                      [](RunConfig& c, int v) {
                        if (v != 4 && v != 8) throw Error(ErrorCode::ConfigError, "--connectivity must be 4 or 8");
                        c.components.connectivity = v == 4 ? ualp::geometry::Connectivity::Four
                                                           : ualp::geometry::Connectivity::Eight;
                      });
    add_override<std::size_t>(sub, overrides, "--min-area", "Smallest component kept, in pixels (default 8)",
                              [](RunConfig& c, std::size_t v) { c.components.min_area = v; });
  };
  auto match_opts = [&](CLI::App* sub) {
    add_override<double>(sub, overrides, "--iou", "IoU a detection needs to match a truth (default 0.2)",
                         [](RunConfig& c, double v) { c.match.iou_threshold = v; });
    add_override<double>(sub, overrides, "--confidence", "Confidence below which detections are ignored (default 0.25)",
                         [](RunConfig& c, double v) { c.match.confidence_threshold = v; });
    add_override<int>(sub, overrides, "--target-class", "Class id of the lesion class (default 0)",
                      [](RunConfig& c, int v) { c.match.target_class_id = v; });
  };
  auto metric_opts = [&](CLI::App* sub) {
    add_override<std::vector<double>>(sub, overrides, "--iou-thresholds", "Evaluation IoU thresholds (default 0.2 0.5)",
                                      [](RunConfig& c, const std::vector<double>& v) { c.metrics.iou_thresholds = v; });
    add_override<std::vector<double>>(sub, overrides, "--fppi", "FPPI read-out points (default 0.5 1 2 5)",
                                      [](RunConfig& c, const std::vector<double>& v) { c.metrics.fppi_targets = v; });
    add_override<double>(sub, overrides, "--entropy-floor", "Lowest confidence entering the entropy summary (default 0.25)",
                         [](RunConfig& c, double v) { c.metrics.entropy_floor = v; });
    add_override<std::string>(sub, overrides, "--log-base", "Entropy logarithm: e or 2 (default e)",
                              [](RunConfig& c, const std::string& v) {
                                if (v != "e" && v != "2") throw Error(ErrorCode::ConfigError, "--log-base must be e or 2");
                                c.metrics.log_base = v == "e" ? ualp::metrics::LogBase::Natural : ualp::metrics::LogBase::Two;
                              });
  };
  auto scene_opts = [&](CLI::App* sub) {
    add_override<std::uint64_t>(sub, overrides, "--seed", "Master seed (default 42)",
                                [](RunConfig& c, std::uint64_t v) { c.scene.seed = v; });
    add_override<int>(sub, overrides, "--train-images", "Training images (default 200)",
                      [](RunConfig& c, int v) { c.scene.train_images = v; });
    add_override<int>(sub, overrides, "--val-images", "Validation images (default 50)",
                      [](RunConfig& c, int v) { c.scene.val_images = v; });
    add_override<int>(sub, overrides, "--image-size", "Square image size in pixels (default 512)",
                      [](RunConfig& c, int v) { c.scene.image_size = v; });
    add_override<double>(sub, overrides, "--confounder-rate", "Mean confounders per image (default 3)",
                         [](RunConfig& c, double v) { c.scene.confounders_per_image = v; });
    add_override<double>(sub, overrides, "--nodule-rate", "Mean nodules per image (default 1)",
                         [](RunConfig& c, double v) { c.scene.nodules_per_image = v; });
  };

  auto* validate = app.add_subcommand("validate", "Check a manifest and its files");
  manifest_opt(validate);

  auto* extract = app.add_subcommand("extract-bboxes", "Boxes from binary masks (one label file per mask)");
  add_override<std::string>(extract, overrides, "--masks", "Directory of .pgm masks",
                            [](RunConfig& c, const std::string& v) { c.masks = v; });
  out_opt(extract);
  add_override<std::string>(extract, overrides, "--mode", "global (one box per mask) or components",
                            [](RunConfig& c, const std::string& v) { c.mode = v; });
  add_override<int>(extract, overrides, "--class-id", "Class id written on each line (default 0)",
                    [](RunConfig& c, int v) { c.class_id = v; });
  geometry_opts(extract);

  auto* uprior = app.add_subcommand("build-uprior", "Add anatomy boxes from per-structure masks");
  manifest_opt(uprior);
  add_override<std::string>(uprior, overrides, "--masks", "Directory holding <image_id>_<structure>.pgm",
                            [](RunConfig& c, const std::string& v) { c.masks = v; });
  add_switch(uprior, overrides, "--from-scenes", "Render masks from simulator scene files instead",
             [](RunConfig& c) { c.from_scenes = true; });
  out_opt(uprior);
  geometry_opts(uprior);

  auto* mine = app.add_subcommand("mine-upost", "Turn training-split false positives into fp labels");
  manifest_opt(mine);
  out_opt(mine);
  match_opts(mine);
  add_override<int>(mine, overrides, "--fp-class-id", "Class id for mined boxes (default: the vocabulary's upost class)",
                    [](RunConfig& c, int v) { c.fp_class_id = v; });

  auto* compose = app.add_subcommand("compose", "Derive an ablation label set");
  manifest_opt(compose);
  out_opt(compose);
  add_override<std::string>(compose, overrides, "--variant", "target-only | target-plus-prior | full",
                            [](RunConfig& c, const std::string& v) { c.variant = v; });

  auto* evaluate = app.add_subcommand("evaluate", "FROC, PR and entropy of predictions against labels");
  manifest_opt(evaluate);
  out_opt(evaluate);
  add_override<std::string>(evaluate, overrides, "--split", "train or val (default val)",
                            [](RunConfig& c, const std::string& v) { c.split = v; });
  metric_opts(evaluate);

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset and optional detector predictions");
  out_opt(simulate);
  scene_opts(simulate);
  add_switch(simulate, overrides, "--no-masks", "Skip writing .pgm masks", [](RunConfig& c) { c.scene.write_masks = false; });
  add_override<std::string>(simulate, overrides, "--detector", "Emit predictions of a detector trained on this variant",
                            [](RunConfig& c, const std::string& v) { c.detector = v; });
  add_switch(simulate, overrides, "--no-upost", "Full detector without mined fp labels",
             [](RunConfig& c) { c.upost_learned = false; });

  auto* experiment = app.add_subcommand("experiment", "Run the full policy loop on synthetic data and report");
  out_opt(experiment);
  scene_opts(experiment);
  match_opts(experiment);
  metric_opts(experiment);
  geometry_opts(experiment);
  add_switch(experiment, overrides, "--write-masks", "Materialize anatomy masks as .pgm files",
             [](RunConfig& c) { c.scene.write_masks = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig config;
    config.scene.write_masks = !experiment->parsed();
    if (!config_path.empty()) {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(ualp::read_text_file(config_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, config_path + ": " + e.what());
      }
      ualp::cli::apply_config(config, doc);
    }
    for (const auto& apply : overrides) apply(config);
    if (config.workers == 0) config.workers = ualp::default_worker_count();

    if (validate->parsed()) return run_validate(config);
    if (extract->parsed()) return run_extract(config);
    if (uprior->parsed()) return run_build_uprior(config);
    if (mine->parsed()) return run_mine(config);
    if (compose->parsed()) return run_compose(config);
    if (evaluate->parsed()) return run_evaluate(config);
    if (simulate->parsed()) return run_simulate(config);
    if (experiment->parsed()) return run_experiment(config);
  } catch (const Error& e) {
    std::cerr << "ualp: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "ualp: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "ualp: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}
