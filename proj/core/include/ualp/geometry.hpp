#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ualp::geometry {

/// Axis-aligned box in continuous pixel coordinates. Pixel (i, j) covers
/// [i, i+1) x [j, j+1), so `x_max`/`y_max` are exclusive edges.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  /// Validating constructor; throws Error(InvalidBox).
  static BBox make(double x_min, double y_min, double x_max, double y_max);

  bool valid() const noexcept;
  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double area() const noexcept { return width() * height(); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Center/size box expressed as fractions of the image extent.
struct NormalizedBBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  /// Edges may overshoot [0,1] by this much; six-decimal label files round
  /// center and size independently.
  static constexpr double kEdgeTolerance = 1e-6;

  static NormalizedBBox make(double cx, double cy, double w, double h);

  bool valid() const noexcept;
  double x_min() const noexcept { return cx - w / 2.0; }
  double y_min() const noexcept { return cy - h / 2.0; }
  double x_max() const noexcept { return cx + w / 2.0; }
  double y_max() const noexcept { return cy + h / 2.0; }

  /// Corner form in unit-image coordinates, clamped to [0,1].
  BBox corners() const;

  friend bool operator==(const NormalizedBBox&, const NormalizedBBox&) = default;
};

/// Row-major 8-bit mask; any nonzero byte is foreground.
class PixelMask {
 public:
  PixelMask() = default;
  PixelMask(std::size_t width, std::size_t height);
  PixelMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::span<const std::uint8_t> values() const noexcept { return values_; }

  std::uint8_t at(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }
  void set(std::size_t x, std::size_t y, std::uint8_t v) { values_[y * width_ + x] = v; }
  bool foreground(std::size_t x, std::size_t y) const { return at(x, y) > 0; }

  std::size_t foreground_count() const noexcept;

  friend bool operator==(const PixelMask&, const PixelMask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> values_;
};

enum class Connectivity { Four = 4, Eight = 8 };

struct ComponentConfig {
  Connectivity connectivity = Connectivity::Eight;
  std::size_t min_area = 8;
};

double iou(const BBox& a, const BBox& b) noexcept;

/// Ratio of shared to combined foreground. Two empty masks agree perfectly
/// and score 1.0. Throws Error(DimensionMismatch).
double mask_iou(const PixelMask& a, const PixelMask& b);

/// Tight box around every foreground pixel. Throws Error(NoForeground).
BBox bbox_from_mask(const PixelMask& mask);

/// One tight box per connected foreground component of at least `min_area`
/// pixels, sorted by (y_min, x_min).
std::vector<BBox> components_from_mask(const PixelMask& mask, Connectivity connectivity,
                                       std::size_t min_area);

inline std::vector<BBox> components_from_mask(const PixelMask& mask, const ComponentConfig& config) {
  return components_from_mask(mask, config.connectivity, config.min_area);
}

/// Throws Error(OutOfBounds) if the box leaves [0,w]x[0,h].
NormalizedBBox normalize(const BBox& box, double image_w, double image_h);
BBox denormalize(const NormalizedBBox& box, double image_w, double image_h);

}  // namespace ualp::geometry
