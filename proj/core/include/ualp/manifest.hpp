#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ualp/dataset.hpp"

namespace ualp::dataset {

/// One image of a dataset. Paths are relative to the manifest's directory.
struct ImageRecord {
  std::string id;
  int width = 0;
  int height = 0;
  Split split = Split::Train;
  std::string labels;
  std::optional<std::string> predictions;
  std::optional<std::string> scene;
  std::map<std::string, std::string> masks;  // structure name -> mask file

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.2;

  friend bool operator==(const SplitFractions&, const SplitFractions&) = default;
};

struct DatasetManifest {
  std::vector<ImageRecord> images;
  ClassVocabulary vocabulary;
  SplitFractions split_fractions;
  std::filesystem::path base_dir;  // where relative paths resolve; not serialized

  std::filesystem::path resolve(const std::string& relative) const { return base_dir / relative; }
  std::vector<const ImageRecord*> images_in(Split split) const;
  const ImageRecord* find(std::string_view image_id) const;
};

inline constexpr std::string_view kManifestFormat = "ualp-manifest/1";

/// Canonical JSON form (fixed key order, two-space indent, trailing newline).
std::string serialize_manifest(const DatasetManifest& manifest);
/// Throws Error(ParseError) on malformed documents and Error(ConfigError)
/// on invalid vocabularies. Files are not checked.
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

/// Parse only; file existence is left to validate_manifest.
DatasetManifest read_manifest(const std::filesystem::path& path);
/// Parse and validate; throws Error(ValidationFailed) listing error findings.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Rewrites every relative path so it resolves identically from `new_base`.
DatasetManifest rebase_manifest(const DatasetManifest& manifest, const std::filesystem::path& new_base);

enum class Severity { Warning, Error };

struct Finding {
  Severity severity = Severity::Error;
  std::string code;  // DuplicateId, MissingFile, InvalidBox, UnknownClass, ParseError, RoleViolation, ...
  std::string image_id;
  std::size_t line = 0;  // 0 when not line-specific
  std::string detail;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool has_errors() const noexcept;
  bool empty() const noexcept { return findings.empty(); }
  std::string to_text() const;
};

ValidationReport validate_manifest(const DatasetManifest& manifest);

}  // namespace ualp::dataset
