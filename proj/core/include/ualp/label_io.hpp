#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ualp/dataset.hpp"
#include "ualp/error.hpp"

namespace ualp::dataset {

// Label line:      <class_id> <cx> <cy> <w> <h>
// Prediction line: <class_id> <confidence> <cx> <cy> <w> <h>
// Coordinates are normalized, written with six decimals, one object per line.

std::string format_label_line(const GroundTruthObject& object);
std::string format_prediction_line(const Detection& detection);

struct LineIssue {
  ErrorCode code = ErrorCode::ParseError;
  std::size_t line = 0;  // 1-based
  std::string message;
};

template <typename T>
struct ParsedLines {
  std::vector<T> items;
  std::vector<std::size_t> line_numbers;  // parallel to items
  std::vector<LineIssue> issues;
};

/// Non-throwing parsers; every malformed line is reported, valid lines are kept.
ParsedLines<GroundTruthObject> scan_labels(std::string_view text, const ClassVocabulary& vocabulary);
ParsedLines<Detection> scan_predictions(std::string_view text, const ClassVocabulary& vocabulary);

/// Class id of a line without full validation; nullopt if the first token is not an integer.
std::optional<int> leading_class_id(std::string_view line);

std::vector<GroundTruthObject> parse_labels(std::string_view text, const ClassVocabulary& vocabulary,
                                            std::string_view source = "<memory>");
std::vector<Detection> parse_predictions(std::string_view text, const ClassVocabulary& vocabulary,
                                         std::string_view source = "<memory>");

std::string encode_labels(std::span<const GroundTruthObject> objects);
std::string encode_predictions(std::span<const Detection> detections);

std::vector<GroundTruthObject> load_labels(const std::filesystem::path& path, const ClassVocabulary& vocabulary);
void save_labels(std::span<const GroundTruthObject> objects, const std::filesystem::path& path);

std::vector<Detection> load_predictions(const std::filesystem::path& path, const ClassVocabulary& vocabulary);
void save_predictions(std::span<const Detection> detections, const std::filesystem::path& path);

}  // namespace ualp::dataset
