#include "ualp/dataset.hpp"

#include <algorithm>
#include <set>

#include "ualp/error.hpp"

namespace ualp::dataset {

std::string_view to_string(ClassRole role) noexcept {
  switch (role) {
    case ClassRole::Target: return "target";
    case ClassRole::UPrior: return "uprior";
    case ClassRole::UPost: return "upost";
  }
  return "target";
}

std::string_view to_string(Split split) noexcept { return split == Split::Train ? "train" : "val"; }

std::string_view to_string(LabelSetVariant variant) noexcept {
  switch (variant) {
    case LabelSetVariant::TargetOnly: return "target-only";
    case LabelSetVariant::TargetPlusPrior: return "target-plus-prior";
    case LabelSetVariant::Full: return "full";
  }
  return "full";
}

ClassRole parse_role(std::string_view text) {
  if (text == "target") return ClassRole::Target;
  if (text == "uprior") return ClassRole::UPrior;
  if (text == "upost") return ClassRole::UPost;
  throw Error(ErrorCode::ConfigError, "unknown class role '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  throw Error(ErrorCode::ConfigError, "unknown split '" + std::string(text) + "'");
}

LabelSetVariant parse_variant(std::string_view text) {
  if (text == "target-only") return LabelSetVariant::TargetOnly;
  if (text == "target-plus-prior") return LabelSetVariant::TargetPlusPrior;
  if (text == "full") return LabelSetVariant::Full;
  throw Error(ErrorCode::ConfigError, "unknown label-set variant '" + std::string(text) + "'");
}

bool variant_keeps(LabelSetVariant variant, ClassRole role) noexcept {
  switch (variant) {
    case LabelSetVariant::TargetOnly: return role == ClassRole::Target;
    case LabelSetVariant::TargetPlusPrior: return role != ClassRole::UPost;
    case LabelSetVariant::Full: return true;
  }
  return false;
}

ClassVocabulary::ClassVocabulary(std::vector<ClassEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> names;
  std::size_t targets = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.id != static_cast<int>(i)) {
      throw Error(ErrorCode::ConfigError, "class ids must be contiguous from 0; entry " + std::to_string(i) +
                                              " has id " + std::to_string(e.id));
    }
    if (e.name.empty() || !names.insert(e.name).second) {
      throw Error(ErrorCode::ConfigError, "class names must be unique and non-empty ('" + e.name + "')");
    }
    targets += e.role == ClassRole::Target ? 1 : 0;
  }
  if (targets != 1) {
    throw Error(ErrorCode::ConfigError, "vocabulary needs exactly one target class, found " + std::to_string(targets));
  }
}

ClassVocabulary ClassVocabulary::default_full() {
  std::vector<ClassEntry> entries;
  entries.push_back({0, "nodule", ClassRole::Target});
  int id = 1;
  for (auto name : kAnatomyStructures) entries.push_back({id++, std::string(name), ClassRole::UPrior});
  entries.push_back({id, "fp", ClassRole::UPost});
  return ClassVocabulary(std::move(entries));
}

const ClassEntry& ClassVocabulary::at(int id) const {
  if (!contains(id)) throw Error(ErrorCode::UnknownClass, "class id " + std::to_string(id) + " not in vocabulary");
  return entries_[static_cast<std::size_t>(id)];
}

std::optional<int> ClassVocabulary::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.id;
  }
  return std::nullopt;
}

int ClassVocabulary::target_id() const {
  auto id = first_with_role(ClassRole::Target);
  if (!id) throw Error(ErrorCode::ConfigError, "vocabulary has no target class");
  return *id;
}

std::optional<int> ClassVocabulary::first_with_role(ClassRole role) const {
  for (const auto& e : entries_) {
    if (e.role == role) return e.id;
  }
  return std::nullopt;
}

std::vector<int> ClassVocabulary::ids_with_role(ClassRole role) const {
  std::vector<int> ids;
  for (const auto& e : entries_) {
    if (e.role == role) ids.push_back(e.id);
  }
  return ids;
}

ClassVocabulary compose_vocabulary(const ClassVocabulary& vocabulary, LabelSetVariant variant,
                                   std::vector<int>* old_to_new) {
  std::vector<int> mapping(vocabulary.size(), -1);
  std::vector<ClassEntry> entries;
  for (ClassRole role : {ClassRole::Target, ClassRole::UPrior, ClassRole::UPost}) {
    if (!variant_keeps(variant, role)) continue;
    for (int old_id : vocabulary.ids_with_role(role)) {
      const int new_id = static_cast<int>(entries.size());
      mapping[static_cast<std::size_t>(old_id)] = new_id;
      entries.push_back({new_id, vocabulary.at(old_id).name, role});
    }
  }
  if (old_to_new) *old_to_new = std::move(mapping);
  return ClassVocabulary(std::move(entries));
}

}  // namespace ualp::dataset
