#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ualp/geometry.hpp"
#include "ualp/manifest.hpp"

namespace ualp::dataset {

/// Supplies the mask of one anatomy structure for one image, or nullopt when
/// the segmentation step produced none.
using MaskProvider = std::function<std::optional<geometry::PixelMask>(const ImageRecord&, std::string_view structure)>;

/// Reads `<dir>/<image_id>_<structure>.pgm`.
MaskProvider directory_mask_provider(std::filesystem::path dir);

struct UPriorConfig {
  geometry::ComponentConfig components;
  std::size_t workers = 1;
};

struct UPriorReport {
  std::size_t images = 0;
  std::size_t boxes_added = 0;
  std::size_t missing_masks = 0;
  std::vector<std::pair<std::string, std::size_t>> missing_per_image;  // images with at least one missing mask

  std::string to_json() const;
};

struct UPriorResult {
  DatasetManifest manifest;
  UPriorReport report;
};

/// Boxes for every UPrior class of `vocabulary`, in class-id order then
/// component order. Throws Error(DimensionMismatch) when a mask does not
/// match the image extent.
std::vector<GroundTruthObject> uprior_objects(const ImageRecord& image, const ClassVocabulary& vocabulary,
                                              const MaskProvider& masks, const geometry::ComponentConfig& config,
                                              std::size_t* missing = nullptr);

/// Emits the target-plus-prior label set under `out_dir`: labels/<id>.txt,
/// uprior_report.json and manifest.json. Existing non-anatomy lines are kept
/// byte for byte; anatomy lines are regenerated from the masks.
UPriorResult build_uprior(const DatasetManifest& manifest, const MaskProvider& masks,
                          const std::filesystem::path& out_dir, const UPriorConfig& config = {});

struct ClassRemap {
  LabelSetVariant variant = LabelSetVariant::Full;
  ClassVocabulary source;
  ClassVocabulary target;
  std::vector<int> old_to_new;  // -1 = dropped

  std::string to_json() const;
};

struct ComposeResult {
  DatasetManifest manifest;
  ClassRemap remap;
};

/// Drops labels (and predictions) whose role the variant excludes and
/// renumbers the survivors. Writes labels/, predictions/, remap.json and
/// manifest.json under `out_dir`.
ComposeResult compose(const DatasetManifest& manifest, LabelSetVariant variant, const std::filesystem::path& out_dir,
                      std::size_t workers = 1);

}  // namespace ualp::dataset
