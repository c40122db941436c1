#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ualp/geometry.hpp"

namespace ualp::dataset {

/// Where a class sits in the uncertainty taxonomy: the lesion itself,
/// structures labelable before any detector exists, or confounders mined
/// from a detector's false positives.
enum class ClassRole { Target, UPrior, UPost };

enum class Split { Train, Val };

/// Ablation label sets; each keeps a growing subset of roles.
enum class LabelSetVariant { TargetOnly, TargetPlusPrior, Full };

std::string_view to_string(ClassRole role) noexcept;
std::string_view to_string(Split split) noexcept;
std::string_view to_string(LabelSetVariant variant) noexcept;
ClassRole parse_role(std::string_view text);
Split parse_split(std::string_view text);
LabelSetVariant parse_variant(std::string_view text);

bool variant_keeps(LabelSetVariant variant, ClassRole role) noexcept;

inline constexpr std::array<LabelSetVariant, 3> kAllVariants = {
    LabelSetVariant::TargetOnly, LabelSetVariant::TargetPlusPrior, LabelSetVariant::Full};

inline constexpr std::array<std::string_view, 10> kAnatomyStructures = {
    "clavicle", "scapula", "lung", "hilum", "heart", "aorta", "diaphragm", "mediastinum", "trachea", "spine"};

struct ClassEntry {
  int id = 0;
  std::string name;
  ClassRole role = ClassRole::Target;

  friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

/// Ordered class list. Ids are contiguous from 0, names are unique and
/// exactly one entry has the Target role; the constructor throws
/// Error(ConfigError) otherwise.
class ClassVocabulary {
 public:
  ClassVocabulary() = default;
  explicit ClassVocabulary(std::vector<ClassEntry> entries);

  /// nodule (0, Target), the ten anatomy structures (1-10, UPrior), fp (11, UPost).
  static ClassVocabulary default_full();

  const std::vector<ClassEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(int id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < entries_.size(); }
  const ClassEntry& at(int id) const;
  std::optional<int> find(std::string_view name) const;
  int target_id() const;
  std::optional<int> first_with_role(ClassRole role) const;
  std::vector<int> ids_with_role(ClassRole role) const;

  friend bool operator==(const ClassVocabulary&, const ClassVocabulary&) = default;

 private:
  std::vector<ClassEntry> entries_;
};

/// Vocabulary restricted to the roles kept by `variant`, renumbered
/// Target first, then UPrior by original id, then UPost. `old_to_new`
/// receives -1 for dropped classes.
ClassVocabulary compose_vocabulary(const ClassVocabulary& vocabulary, LabelSetVariant variant,
                                   std::vector<int>* old_to_new = nullptr);

struct GroundTruthObject {
  int class_id = 0;
  geometry::NormalizedBBox box;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

struct Detection {
  int class_id = 0;
  double confidence = 0.0;
  geometry::NormalizedBBox box;

  friend bool operator==(const Detection&, const Detection&) = default;
};

}  // namespace ualp::dataset
