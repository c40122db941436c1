#include "ualp/manifest.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ualp/error.hpp"
#include "ualp/label_io.hpp"
#include "ualp/text_format.hpp"

namespace ualp::dataset {
namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

template <typename T>
T required(const ordered_json& node, const char* key, const std::string& where) {
  if (!node.contains(key)) throw Error(ErrorCode::ParseError, where + ": missing key '" + key + "'");
  try {
    return node.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, where + ": key '" + key + "' has the wrong type");
  }
}

std::optional<std::string> optional_string(const ordered_json& node, const char* key, const std::string& where) {
  if (!node.contains(key) || node.at(key).is_null()) return std::nullopt;
  return required<std::string>(node, key, where);
}

fs::path rebase_path(const fs::path& old_base, const fs::path& new_base, const std::string& relative) {
  const fs::path absolute = fs::weakly_canonical(fs::absolute(old_base / relative));
  return fs::relative(absolute, fs::weakly_canonical(fs::absolute(new_base)));
}

}  // namespace

std::vector<const ImageRecord*> DatasetManifest::images_in(Split split) const {
  std::vector<const ImageRecord*> out;
  for (const auto& image : images) {
    if (image.split == split) out.push_back(&image);
  }
  return out;
}

const ImageRecord* DatasetManifest::find(std::string_view image_id) const {
  for (const auto& image : images) {
    if (image.id == image_id) return &image;
  }
  return nullptr;
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  ordered_json doc;
  doc["format"] = kManifestFormat;
  ordered_json vocab = ordered_json::array();
  for (const auto& e : manifest.vocabulary.entries()) {
    ordered_json entry;
    entry["id"] = e.id;
    entry["name"] = e.name;
    entry["role"] = to_string(e.role);
    vocab.push_back(std::move(entry));
  }
  doc["vocabulary"] = std::move(vocab);
  doc["split_fractions"] = {{"train", manifest.split_fractions.train}, {"val", manifest.split_fractions.val}};
  ordered_json images = ordered_json::array();
  for (const auto& image : manifest.images) {
    ordered_json rec;
    rec["id"] = image.id;
    rec["width"] = image.width;
    rec["height"] = image.height;
    rec["split"] = to_string(image.split);
    rec["labels"] = image.labels;
    if (image.predictions) rec["predictions"] = *image.predictions;
    if (image.scene) rec["scene"] = *image.scene;
    if (!image.masks.empty()) {
      ordered_json masks = ordered_json::object();
      for (const auto& [structure, path] : image.masks) masks[structure] = path;
      rec["masks"] = std::move(masks);
    }
    images.push_back(std::move(rec));
  }
  doc["images"] = std::move(images);
  return doc.dump(2) + "\n";
}

DatasetManifest parse_manifest(std::string_view text, const fs::path& base_dir) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "manifest root must be an object");
  const auto format = required<std::string>(doc, "format", "manifest");
  if (format != kManifestFormat) {
    throw Error(ErrorCode::ParseError, "unsupported manifest format '" + format + "'");
  }

  DatasetManifest manifest;
  manifest.base_dir = base_dir;

  if (!doc.contains("vocabulary") || !doc["vocabulary"].is_array()) {
    throw Error(ErrorCode::ParseError, "manifest: 'vocabulary' must be an array");
  }
  std::vector<ClassEntry> entries;
  for (const auto& node : doc["vocabulary"]) {
    entries.push_back({required<int>(node, "id", "vocabulary entry"), required<std::string>(node, "name", "vocabulary entry"),
                       parse_role(required<std::string>(node, "role", "vocabulary entry"))});
  }
  manifest.vocabulary = ClassVocabulary(std::move(entries));

  if (doc.contains("split_fractions")) {
    const auto& sf = doc["split_fractions"];
    manifest.split_fractions.train = required<double>(sf, "train", "split_fractions");
    manifest.split_fractions.val = required<double>(sf, "val", "split_fractions");
  }

  if (!doc.contains("images") || !doc["images"].is_array()) {
    throw Error(ErrorCode::ParseError, "manifest: 'images' must be an array");
  }
  std::size_t index = 0;
  for (const auto& node : doc["images"]) {
    const std::string where = "images[" + std::to_string(index++) + "]";
    ImageRecord rec;
    rec.id = required<std::string>(node, "id", where);
    rec.width = required<int>(node, "width", where);
    rec.height = required<int>(node, "height", where);
    rec.split = parse_split(required<std::string>(node, "split", where));
    rec.labels = required<std::string>(node, "labels", where);
    rec.predictions = optional_string(node, "predictions", where);
    rec.scene = optional_string(node, "scene", where);
    if (node.contains("masks")) {
      if (!node["masks"].is_object()) throw Error(ErrorCode::ParseError, where + ": 'masks' must be an object");
      for (const auto& [structure, path] : node["masks"].items()) {
        if (!path.is_string()) throw Error(ErrorCode::ParseError, where + ": mask paths must be strings");
        rec.masks[structure] = path.get<std::string>();
      }
    }
    manifest.images.push_back(std::move(rec));
  }
  return manifest;
}

DatasetManifest read_manifest(const fs::path& path) {
  return parse_manifest(read_text_file(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

DatasetManifest load_manifest(const fs::path& path) {
  DatasetManifest manifest = read_manifest(path);
  const auto report = validate_manifest(manifest);
  if (report.has_errors()) {
    throw Error(ErrorCode::ValidationFailed, path.string() + "\n" + report.to_text());
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  write_text_file(path, serialize_manifest(manifest));
}

DatasetManifest rebase_manifest(const DatasetManifest& manifest, const fs::path& new_base) {
  DatasetManifest out = manifest;
  out.base_dir = new_base;
  for (auto& image : out.images) {
    image.labels = rebase_path(manifest.base_dir, new_base, image.labels).generic_string();
    if (image.predictions) {
      image.predictions = rebase_path(manifest.base_dir, new_base, *image.predictions).generic_string();
    }
    if (image.scene) image.scene = rebase_path(manifest.base_dir, new_base, *image.scene).generic_string();
    for (auto& [structure, path] : image.masks) path = rebase_path(manifest.base_dir, new_base, path).generic_string();
  }
  return out;
}

bool ValidationReport::has_errors() const noexcept {
  for (const auto& f : findings) {
    if (f.severity == Severity::Error) return true;
  }
  return false;
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  for (const auto& f : findings) {
    os << (f.severity == Severity::Error ? "error" : "warning") << " " << f.code;
    if (!f.image_id.empty()) os << " image=" << f.image_id;
    if (f.line != 0) os << " line=" << f.line;
    os << ": " << f.detail << "\n";
  }
  return os.str();
}

ValidationReport validate_manifest(const DatasetManifest& manifest) {
  ValidationReport report;
  auto add = [&](Severity sev, std::string code, std::string image, std::size_t line, std::string detail) {
    report.findings.push_back({sev, std::move(code), std::move(image), line, std::move(detail)});
  };

  if (manifest.vocabulary.size() == 0) {
    add(Severity::Error, "RoleViolation", "", 0, "vocabulary is empty");
  } else if (manifest.vocabulary.target_id() != 0) {
    add(Severity::Error, "RoleViolation", "", 0, "target class must have id 0");
  }
  const auto& sf = manifest.split_fractions;
  if (sf.train < 0.0 || sf.val < 0.0 || std::abs(sf.train + sf.val - 1.0) > 1e-9) {
    add(Severity::Error, "SplitFraction", "", 0, "split fractions must be non-negative and sum to 1");
  }

  std::set<std::string> ids;
  std::size_t train_count = 0;
  for (const auto& image : manifest.images) {
    if (!ids.insert(image.id).second) {
      add(Severity::Error, "DuplicateId", image.id, 0, "image id appears more than once");
    }
    if (image.width <= 0 || image.height <= 0) {
      add(Severity::Error, "InvalidImage", image.id, 0, "image extent must be positive");
    }
    train_count += image.split == Split::Train ? 1 : 0;

    auto check_file = [&](const std::string& rel, const char* what) {
      if (!fs::is_regular_file(manifest.resolve(rel))) {
        add(Severity::Error, "MissingFile", image.id, 0, std::string(what) + " file '" + rel + "' does not exist");
        return false;
      }
      return true;
    };

    if (check_file(image.labels, "labels")) {
      const auto parsed = scan_labels(read_text_file(manifest.resolve(image.labels)), manifest.vocabulary);
      for (const auto& issue : parsed.issues) {
        add(Severity::Error, std::string(to_string(issue.code)), image.id, issue.line, issue.message);
      }
      if (image.split == Split::Val) {
        for (std::size_t i = 0; i < parsed.items.size(); ++i) {
          if (manifest.vocabulary.at(parsed.items[i].class_id).role == ClassRole::UPost) {
            add(Severity::Warning, "RoleViolation", image.id, parsed.line_numbers[i],
                "mined false-positive label on a validation image");
          }
        }
      }
    }
    if (image.predictions && check_file(*image.predictions, "predictions")) {
      const auto parsed = scan_predictions(read_text_file(manifest.resolve(*image.predictions)), manifest.vocabulary);
      for (const auto& issue : parsed.issues) {
        add(Severity::Error, std::string(to_string(issue.code)), image.id, issue.line, "predictions: " + issue.message);
      }
    }
    if (image.scene) check_file(*image.scene, "scene");
    for (const auto& [structure, path] : image.masks) check_file(path, ("mask '" + structure + "'").c_str());
  }

  if (!manifest.images.empty()) {
    const double actual = static_cast<double>(train_count) / static_cast<double>(manifest.images.size());
    if (std::abs(actual - sf.train) > 0.05) {
      add(Severity::Warning, "SplitFraction", "", 0,
          "train fraction " + format_fixed(actual, 3) + " differs from recorded " + format_fixed(sf.train, 3));
    }
  }
  return report;
}

}  // namespace ualp::dataset
