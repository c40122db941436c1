#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ualp/geometry.hpp"

namespace ualp::geometry {

// Binary graymap ("P5", maxval 255, no comments). Parse failures throw
// Error(ParseError) with the offending file named; missing files throw
// Error(IoError).
PixelMask parse_pgm(std::string_view bytes, std::string_view source_name = "<memory>");
std::string encode_pgm(const PixelMask& mask);

PixelMask read_pgm(const std::filesystem::path& path);
void write_pgm(const PixelMask& mask, const std::filesystem::path& path);

}  // namespace ualp::geometry
