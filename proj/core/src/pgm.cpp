#include "ualp/pgm.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>

#include "ualp/error.hpp"

namespace ualp::geometry {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class HeaderReader {
 public:
  HeaderReader(std::string_view bytes, std::string_view source) : bytes_(bytes), source_(source) {}

  std::size_t number(const char* what) {
    skip_space();
    if (pos_ < bytes_.size() && bytes_[pos_] == '#') fail("comments are not supported");
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(bytes_.data() + start, bytes_.data() + pos_, value);
    if (ec != std::errc() || start == pos_) fail(std::string("bad ") + what);
    (void)ptr;
    return value;
  }

  void skip_space() {
    while (pos_ < bytes_.size() && is_space(bytes_[pos_])) ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::ParseError, std::string(source_) + ": " + why);
  }

 private:
  std::string_view bytes_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

}  // namespace

PixelMask parse_pgm(std::string_view bytes, std::string_view source_name) {
  HeaderReader reader(bytes, source_name);
  if (bytes.substr(0, 2) != "P5") reader.fail("missing P5 magic");
  reader.advance(2);
  if (reader.pos() >= bytes.size() || !is_space(bytes[reader.pos()])) reader.fail("malformed magic");
  const std::size_t width = reader.number("width");
  const std::size_t height = reader.number("height");
  const std::size_t maxval = reader.number("maxval");
  if (width == 0 || height == 0) reader.fail("zero image extent");
  if (maxval != 255) reader.fail("maxval must be 255");
  if (reader.pos() >= bytes.size() || !is_space(bytes[reader.pos()])) reader.fail("header not terminated");
  reader.advance(1);
  const std::size_t expected = width * height;
  if (bytes.size() - reader.pos() != expected) {
    reader.fail("expected " + std::to_string(expected) + " pixel bytes, found " +
                std::to_string(bytes.size() - reader.pos()));
  }
  const auto* first = reinterpret_cast<const std::uint8_t*>(bytes.data() + reader.pos());
  return PixelMask(width, height, std::vector<std::uint8_t>(first, first + expected));
}

std::string encode_pgm(const PixelMask& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  const auto values = mask.values();
  out.append(reinterpret_cast<const char*>(values.data()), values.size());
  return out;
}

PixelMask read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_pgm(bytes, path.string());
}

void write_pgm(const PixelMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const std::string bytes = encode_pgm(mask);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace ualp::geometry
