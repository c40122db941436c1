#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ualp {

/// Fixed-point rendering with `decimals` places; "-0.000000" is emitted as "0.000000".
std::string format_fixed(double value, int decimals);

/// Shortest general-form rendering with at most `digits` significant digits.
std::string format_significant(double value, int digits = 9);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Splits on '\n'; a trailing newline does not produce an empty final line.
std::vector<std::string_view> split_lines(std::string_view text);

/// Hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace ualp
