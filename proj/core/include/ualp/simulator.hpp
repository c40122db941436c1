#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ualp/dataset.hpp"
#include "ualp/geometry.hpp"
#include "ualp/label_sets.hpp"
#include "ualp/manifest.hpp"
#include "ualp/rng.hpp"

namespace ualp::simulator {

struct SizeRange {
  double min_px = 0.0;
  double max_px = 0.0;
};

/// Synthetic chest-layout scenes. Defaults are our own choices for a
/// desk-scale benchmark and carry no clinical meaning.
struct SceneConfig {
  int image_size = 512;
  int train_images = 200;
  int val_images = 50;
  double nodules_per_image = 1.0;
  double confounders_per_image = 3.0;
  double anatomy_jitter = 0.02;  // fraction of the image size
  SizeRange nodule_size{12.0, 40.0};
  SizeRange confounder_size{10.0, 36.0};
  std::uint64_t seed = 42;
  bool write_masks = true;

  /// Throws Error(ConfigError) for negative rates or entities that cannot fit.
  void validate() const;
};

enum class EntityKind { Nodule, Anatomy, Confounder };
enum class Shape { Ellipse, Rectangle };

struct SceneEntity {
  EntityKind kind = EntityKind::Nodule;
  std::string name;  // "nodule", an anatomy structure, or "confounder"
  Shape shape = Shape::Ellipse;
  geometry::BBox box;  // pixels

  friend bool operator==(const SceneEntity&, const SceneEntity&) = default;
};

/// Full truth of one image, confounders included.
struct Scene {
  std::vector<SceneEntity> entities;
};

// Scene file: one entity per line, "<kind> <name> <shape> <x_min> <y_min> <x_max> <y_max>",
// pixel coordinates with six decimals.
std::string encode_scene(const Scene& scene);
Scene parse_scene(std::string_view text, std::string_view source = "<memory>");

/// Marks pixels whose centers fall inside the entity's shape.
void rasterize_into(geometry::PixelMask& mask, const SceneEntity& entity);
geometry::PixelMask render_structure(const Scene& scene, std::string_view structure, int width, int height);

/// Structures the simulated detectors may mistake for nodules when the
/// structure is not part of their vocabulary.
bool nodule_like(std::string_view structure) noexcept;

std::string image_id(std::size_t index);
Scene generate_scene(const SceneConfig& config, std::string_view image_id);

/// Writes manifest.json, labels/ (nodule boxes from the rasterized nodule
/// masks), scenes/ and, when enabled, masks/<id>_<structure>.pgm. The
/// first `train_images` ids form the training split.
dataset::DatasetManifest generate_dataset(const SceneConfig& config, const std::filesystem::path& out_dir,
                                          std::size_t workers = 1);

/// Renders anatomy masks from each image's scene file.
dataset::MaskProvider scene_mask_provider(const dataset::DatasetManifest& manifest);

/// Bounded confidence: lo + (hi - lo) * Kumaraswamy(a, b).
struct ConfidenceModel {
  double lo = 0.0;
  double hi = 1.0;
  double a = 1.0;
  double b = 1.0;

  double at(double u) const noexcept;
};

/// Behavioral stand-in for a detector trained on one label-set variant.
/// Entities whose class the variant knows are emitted under their own
/// class; nodule-like structures and confounders it does not know are
/// emitted as nodules with probability `confusion_probability`. A
/// confounder the fp class fails to claim falls back to that confusion.
struct DetectorProfile {
  dataset::LabelSetVariant variant = dataset::LabelSetVariant::Full;
  bool upost_learned = true;  // Full only: mined fp labels existed at training time
  double nodule_hit_rate = 0.92;
  double anatomy_hit_rate = 0.95;
  double fp_class_hit_rate = 0.8;
  double confusion_probability = 0.6;
  ConfidenceModel hit_confidence{0.5, 1.0, 3.0, 1.0};
  ConfidenceModel confusion_confidence{0.3, 0.98, 3.0, 1.0};
  ConfidenceModel background_confidence{0.0, 0.35, 1.0, 6.0};
  double background_fp_rate = 20.0;
  double box_jitter = 0.08;  // fraction of the box extent

  void validate() const;
};

/// Predictions for one image under the variant's composed vocabulary.
std::vector<dataset::Detection> simulate_image(const DetectorProfile& profile, const Scene& scene, int width,
                                               int height, std::string_view image_id, std::uint64_t seed);

/// Per-image predictions aligned with manifest.images; images outside
/// `split` (when given) get nullopt.
std::vector<std::optional<std::vector<dataset::Detection>>> simulate_detector(
    const DetectorProfile& profile, const dataset::DatasetManifest& manifest, std::uint64_t seed,
    std::optional<dataset::Split> split = std::nullopt, std::size_t workers = 1);

/// Writes predictions/<id>.txt and manifest.json under `out_dir` and returns
/// the manifest with prediction paths attached.
dataset::DatasetManifest write_predictions(const dataset::DatasetManifest& manifest,
                                           const std::vector<std::optional<std::vector<dataset::Detection>>>& predictions,
                                           const std::filesystem::path& out_dir);

}  // namespace ualp::simulator
