#include "ualp/label_sets.hpp"

#include <algorithm>

#include <json.hpp>

#include "ualp/error.hpp"
#include "ualp/label_io.hpp"
#include "ualp/parallel.hpp"
#include "ualp/pgm.hpp"
#include "ualp/text_format.hpp"

namespace ualp::dataset {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return std::string(line);
}

}  // namespace

MaskProvider directory_mask_provider(fs::path dir) {
  return [dir = std::move(dir)](const ImageRecord& image, std::string_view structure) -> std::optional<geometry::PixelMask> {
    const fs::path path = dir / (image.id + "_" + std::string(structure) + ".pgm");
    if (!fs::is_regular_file(path)) return std::nullopt;
    return geometry::read_pgm(path);
  };
}

std::string UPriorReport::to_json() const {
  ordered_json doc;
  doc["images"] = images;
  doc["boxes_added"] = boxes_added;
  doc["missing_masks"] = missing_masks;
  ordered_json per_image = ordered_json::object();
  for (const auto& [id, count] : missing_per_image) per_image[id] = count;
  doc["missing_per_image"] = std::move(per_image);
  return doc.dump(2) + "\n";
}

std::vector<GroundTruthObject> uprior_objects(const ImageRecord& image, const ClassVocabulary& vocabulary,
                                              const MaskProvider& masks, const geometry::ComponentConfig& config,
                                              std::size_t* missing) {
  std::vector<GroundTruthObject> objects;
  std::size_t missing_count = 0;
  for (int class_id : vocabulary.ids_with_role(ClassRole::UPrior)) {
    const auto& name = vocabulary.at(class_id).name;
    const auto mask = masks(image, name);
    if (!mask) {
      ++missing_count;
      continue;
    }
    if (mask->width() != static_cast<std::size_t>(image.width) || mask->height() != static_cast<std::size_t>(image.height)) {
      throw Error(ErrorCode::DimensionMismatch,
                  "mask '" + name + "' of image " + image.id + " is " + std::to_string(mask->width()) + "x" +
                      std::to_string(mask->height()) + ", image is " + std::to_string(image.width) + "x" +
                      std::to_string(image.height));
    }
    for (const auto& box : geometry::components_from_mask(*mask, config)) {
      objects.push_back({class_id, geometry::normalize(box, image.width, image.height)});
    }
  }
  if (missing) *missing = missing_count;
  return objects;
}

UPriorResult build_uprior(const DatasetManifest& manifest, const MaskProvider& masks, const fs::path& out_dir,
                          const UPriorConfig& config) {
  fs::create_directories(out_dir / "labels");
  UPriorResult result;
  result.manifest = rebase_manifest(manifest, out_dir);

  const std::size_t n = manifest.images.size();
  std::vector<std::size_t> missing(n, 0);
  std::vector<std::size_t> added(n, 0);

  parallel_for(n, config.workers, [&](std::size_t i) {
    const auto& image = manifest.images[i];
    const std::string existing = read_text_file(manifest.resolve(image.labels));
    // Validates the file before any line is copied through.
    parse_labels(existing, manifest.vocabulary, manifest.resolve(image.labels).string());

    std::string out;
    for (auto line : split_lines(existing)) {
      const auto id = leading_class_id(line);
      if (!id) continue;  // blank line
      if (manifest.vocabulary.at(*id).role == ClassRole::UPrior) continue;
      out += strip_cr(line);
      out += '\n';
    }
    const auto objects = uprior_objects(image, manifest.vocabulary, masks, config.components, &missing[i]);
    added[i] = objects.size();
    out += encode_labels(objects);
    write_text_file(out_dir / "labels" / (image.id + ".txt"), out);
  });

  result.report.images = n;
  for (std::size_t i = 0; i < n; ++i) {
    result.manifest.images[i].labels = "labels/" + manifest.images[i].id + ".txt";
    result.report.boxes_added += added[i];
    result.report.missing_masks += missing[i];
    if (missing[i] > 0) result.report.missing_per_image.emplace_back(manifest.images[i].id, missing[i]);
  }
  write_text_file(out_dir / "uprior_report.json", result.report.to_json());
  write_manifest(result.manifest, out_dir / "manifest.json");
  return result;
}

std::string ClassRemap::to_json() const {
  ordered_json doc;
  doc["variant"] = to_string(variant);
  ordered_json mapping = ordered_json::array();
  for (std::size_t old_id = 0; old_id < old_to_new.size(); ++old_id) {
    ordered_json row;
    row["from"] = old_id;
    row["name"] = source.at(static_cast<int>(old_id)).name;
    if (old_to_new[old_id] >= 0) {
      row["to"] = old_to_new[old_id];
    } else {
      row["to"] = nullptr;
    }
    mapping.push_back(std::move(row));
  }
  doc["mapping"] = std::move(mapping);
  doc["vocabulary_size"] = target.size();
  return doc.dump(2) + "\n";
}

ComposeResult compose(const DatasetManifest& manifest, LabelSetVariant variant, const fs::path& out_dir,
                      std::size_t workers) {
  ComposeResult result;
  result.remap.variant = variant;
  result.remap.source = manifest.vocabulary;
  result.remap.target = compose_vocabulary(manifest.vocabulary, variant, &result.remap.old_to_new);
  const auto& old_to_new = result.remap.old_to_new;

  fs::create_directories(out_dir / "labels");
  const bool any_predictions =
      std::any_of(manifest.images.begin(), manifest.images.end(), [](const auto& im) { return im.predictions.has_value(); });
  if (any_predictions) fs::create_directories(out_dir / "predictions");

  result.manifest = rebase_manifest(manifest, out_dir);
  result.manifest.vocabulary = result.remap.target;

  parallel_for(manifest.images.size(), workers, [&](std::size_t i) {
    const auto& image = manifest.images[i];
    std::vector<GroundTruthObject> kept;
    for (auto object : load_labels(manifest.resolve(image.labels), manifest.vocabulary)) {
      const int mapped = old_to_new[static_cast<std::size_t>(object.class_id)];
      if (mapped < 0) continue;
      object.class_id = mapped;
      kept.push_back(object);
    }
    save_labels(kept, out_dir / "labels" / (image.id + ".txt"));

    if (image.predictions) {
      std::vector<Detection> kept_predictions;
      for (auto det : load_predictions(manifest.resolve(*image.predictions), manifest.vocabulary)) {
        const int mapped = old_to_new[static_cast<std::size_t>(det.class_id)];
        if (mapped < 0) continue;
        det.class_id = mapped;
        kept_predictions.push_back(det);
      }
      save_predictions(kept_predictions, out_dir / "predictions" / (image.id + ".txt"));
    }
  });

  for (auto& image : result.manifest.images) {
    image.labels = "labels/" + image.id + ".txt";
    if (image.predictions) image.predictions = "predictions/" + image.id + ".txt";
  }
  write_text_file(out_dir / "remap.json", result.remap.to_json());
  write_manifest(result.manifest, out_dir / "manifest.json");
  return result;
}

}  // namespace ualp::dataset
