#include "ualp/label_io.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "ualp/text_format.hpp"

namespace ualp::dataset {
namespace {

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

bool parse_int(std::string_view token, int& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool parse_double(std::string_view token, double& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(out);
}

// Shared line scanner; `with_confidence` selects the prediction layout.
template <typename T, bool with_confidence>
ParsedLines<T> scan(std::string_view text, const ClassVocabulary& vocabulary) {
  ParsedLines<T> parsed;
  constexpr std::size_t kTokens = with_confidence ? 6 : 5;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    const auto tokens = tokenize(lines[n]);
    if (tokens.empty()) continue;
    auto issue = [&](ErrorCode code, std::string message) {
      parsed.issues.push_back({code, line_no, std::move(message)});
    };
    if (tokens.size() != kTokens) {
      issue(ErrorCode::ParseError, "expected " + std::to_string(kTokens) + " fields, found " +
                                       std::to_string(tokens.size()));
      continue;
    }
    int class_id = 0;
    if (!parse_int(tokens[0], class_id)) {
      issue(ErrorCode::ParseError, "class id '" + std::string(tokens[0]) + "' is not an integer");
      continue;
    }
    std::array<double, kTokens - 1> values{};
    bool ok = true;
    for (std::size_t k = 1; k < kTokens; ++k) {
      if (!parse_double(tokens[k], values[k - 1])) {
        issue(ErrorCode::ParseError, "field " + std::to_string(k + 1) + " '" + std::string(tokens[k]) +
                                         "' is not a finite number");
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    if (!vocabulary.contains(class_id)) {
      issue(ErrorCode::UnknownClass, "class id " + std::to_string(class_id) + " not in vocabulary");
      continue;
    }
    const std::size_t offset = with_confidence ? 1 : 0;
    geometry::NormalizedBBox box{values[offset], values[offset + 1], values[offset + 2], values[offset + 3]};
    if (!box.valid()) {
      issue(ErrorCode::InvalidBox, "box (" + std::string(tokens[offset + 1]) + " " + std::string(tokens[offset + 2]) +
                                       " " + std::string(tokens[offset + 3]) + " " +
                                       std::string(tokens[offset + 4]) + ") is not inside the unit image");
      continue;
    }
    if constexpr (with_confidence) {
      if (values[0] < 0.0 || values[0] > 1.0) {
        issue(ErrorCode::ParseError, "confidence " + std::string(tokens[1]) + " outside [0,1]");
        continue;
      }
      parsed.items.push_back(Detection{class_id, values[0], box});
    } else {
      parsed.items.push_back(GroundTruthObject{class_id, box});
    }
    parsed.line_numbers.push_back(line_no);
  }
  return parsed;
}

template <typename T>
std::vector<T> throw_on_issue(ParsedLines<T> parsed, std::string_view source) {
  if (!parsed.issues.empty()) {
    const auto& first = parsed.issues.front();
    throw Error(first.code, std::string(source) + ":" + std::to_string(first.line) + ": " + first.message);
  }
  return std::move(parsed.items);
}

std::string coords(const geometry::NormalizedBBox& b) {
  return format_fixed(b.cx, 6) + " " + format_fixed(b.cy, 6) + " " + format_fixed(b.w, 6) + " " +
         format_fixed(b.h, 6);
}

}  // namespace

std::string format_label_line(const GroundTruthObject& object) {
  return std::to_string(object.class_id) + " " + coords(object.box);
}

std::string format_prediction_line(const Detection& detection) {
  return std::to_string(detection.class_id) + " " + format_fixed(detection.confidence, 6) + " " + coords(detection.box);
}

ParsedLines<GroundTruthObject> scan_labels(std::string_view text, const ClassVocabulary& vocabulary) {
  return scan<GroundTruthObject, false>(text, vocabulary);
}

ParsedLines<Detection> scan_predictions(std::string_view text, const ClassVocabulary& vocabulary) {
  return scan<Detection, true>(text, vocabulary);
}

std::optional<int> leading_class_id(std::string_view line) {
  const auto tokens = tokenize(line);
  int id = 0;
  if (tokens.empty() || !parse_int(tokens[0], id)) return std::nullopt;
  return id;
}

std::vector<GroundTruthObject> parse_labels(std::string_view text, const ClassVocabulary& vocabulary,
                                            std::string_view source) {
  return throw_on_issue(scan_labels(text, vocabulary), source);
}

std::vector<Detection> parse_predictions(std::string_view text, const ClassVocabulary& vocabulary,
                                         std::string_view source) {
  return throw_on_issue(scan_predictions(text, vocabulary), source);
}

std::string encode_labels(std::span<const GroundTruthObject> objects) {
  std::string out;
  for (const auto& o : objects) {
    out += format_label_line(o);
    out += '\n';
  }
  return out;
}

std::string encode_predictions(std::span<const Detection> detections) {
  std::string out;
  for (const auto& d : detections) {
    out += format_prediction_line(d);
    out += '\n';
  }
  return out;
}

std::vector<GroundTruthObject> load_labels(const std::filesystem::path& path, const ClassVocabulary& vocabulary) {
  return parse_labels(read_text_file(path), vocabulary, path.string());
}

void save_labels(std::span<const GroundTruthObject> objects, const std::filesystem::path& path) {
  write_text_file(path, encode_labels(objects));
}

std::vector<Detection> load_predictions(const std::filesystem::path& path, const ClassVocabulary& vocabulary) {
  return parse_predictions(read_text_file(path), vocabulary, path.string());
}

void save_predictions(std::span<const Detection> detections, const std::filesystem::path& path) {
  write_text_file(path, encode_predictions(detections));
}

}  // namespace ualp::dataset
