#include "ualp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "ualp/error.hpp"

namespace ualp::geometry {
namespace {

std::string describe(const BBox& b) {
  std::ostringstream os;
  os << "(" << b.x_min << "," << b.y_min << "," << b.x_max << "," << b.y_max << ")";
  return os.str();
}

}  // namespace

BBox BBox::make(double x_min, double y_min, double x_max, double y_max) {
  BBox b{x_min, y_min, x_max, y_max};
  if (!b.valid()) {
    throw Error(ErrorCode::InvalidBox, "box " + describe(b) + " must be finite, non-negative, with positive area");
  }
  return b;
}

bool BBox::valid() const noexcept {
  const bool finite = std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max);
  return finite && x_min >= 0.0 && y_min >= 0.0 && x_min < x_max && y_min < y_max;
}

NormalizedBBox NormalizedBBox::make(double cx, double cy, double w, double h) {
  NormalizedBBox n{cx, cy, w, h};
  if (!n.valid()) {
    std::ostringstream os;
    os << "normalized box (" << cx << "," << cy << "," << w << "," << h << ") is outside the unit image";
    throw Error(ErrorCode::InvalidBox, os.str());
  }
  return n;
}

bool NormalizedBBox::valid() const noexcept {
  if (!(std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h))) return false;
  if (!(w > 0.0 && w <= 1.0 && h > 0.0 && h <= 1.0)) return false;
  constexpr double tol = kEdgeTolerance;
  return x_min() >= -tol && y_min() >= -tol && x_max() <= 1.0 + tol && y_max() <= 1.0 + tol;
}

BBox NormalizedBBox::corners() const {
  return BBox{std::clamp(x_min(), 0.0, 1.0), std::clamp(y_min(), 0.0, 1.0), std::clamp(x_max(), 0.0, 1.0),
              std::clamp(y_max(), 0.0, 1.0)};
}

PixelMask::PixelMask(std::size_t width, std::size_t height) : width_(width), height_(height), values_(width * height, 0) {}

PixelMask::PixelMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (values_.size() != width_ * height_) {
    throw Error(ErrorCode::DimensionMismatch, "mask of " + std::to_string(width_) + "x" + std::to_string(height_) +
                                                  " needs " + std::to_string(width_ * height_) + " values, got " +
                                                  std::to_string(values_.size()));
  }
}

std::size_t PixelMask::foreground_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](std::uint8_t v) { return v > 0; }));
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double mask_iou(const PixelMask& a, const PixelMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::DimensionMismatch, "mask_iou on " + std::to_string(a.width()) + "x" +
                                                  std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                                  "x" + std::to_string(b.height()));
  }
  std::size_t inter = 0;
  std::size_t uni = 0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const bool fa = av[i] > 0;
    const bool fb = bv[i] > 0;
    inter += (fa && fb) ? 1 : 0;
    uni += (fa || fb) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BBox bbox_from_mask(const PixelMask& mask) {
  std::size_t x0 = std::numeric_limits<std::size_t>::max();
  std::size_t y0 = x0;
  std::size_t x1 = 0;
  std::size_t y1 = 0;
  bool any = false;
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      if (!mask.foreground(x, y)) continue;
      any = true;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (!any) throw Error(ErrorCode::NoForeground, "mask has no foreground pixels");
  return BBox{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 + 1),
              static_cast<double>(y1 + 1)};
}

std::vector<BBox> components_from_mask(const PixelMask& mask, Connectivity connectivity, std::size_t min_area) {
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  std::vector<bool> seen(w * h, false);
  std::vector<BBox> out;
  std::deque<std::size_t> queue;

  const bool eight = connectivity == Connectivity::Eight;
  for (std::size_t start = 0; start < w * h; ++start) {
    if (seen[start] || mask.values()[start] == 0) continue;
    seen[start] = true;
    queue.push_back(start);
    std::size_t area = 0;
    std::size_t x0 = w, y0 = h, x1 = 0, y1 = 0;
    while (!queue.empty()) {
      const std::size_t idx = queue.front();
      queue.pop_front();
      const std::size_t x = idx % w;
      const std::size_t y = idx / w;
      ++area;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (!eight && dx != 0 && dy != 0) continue;
          const auto nx = static_cast<std::ptrdiff_t>(x) + dx;
          const auto ny = static_cast<std::ptrdiff_t>(y) + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(w) || ny >= static_cast<std::ptrdiff_t>(h)) continue;
          const auto nidx = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (seen[nidx] || mask.values()[nidx] == 0) continue;
          seen[nidx] = true;
          queue.push_back(nidx);
        }
      }
    }
    if (area >= min_area) {
      out.push_back(BBox{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 + 1),
                         static_cast<double>(y1 + 1)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const BBox& a, const BBox& b) {
    if (a.y_min != b.y_min) return a.y_min < b.y_min;
    return a.x_min < b.x_min;
  });
  return out;
}

NormalizedBBox normalize(const BBox& box, double image_w, double image_h) {
  if (!(image_w > 0.0 && image_h > 0.0)) {
    throw Error(ErrorCode::OutOfBounds, "image extent must be positive");
  }
  if (!box.valid() || box.x_max > image_w || box.y_max > image_h) {
    std::ostringstream os;
    os << "box " << describe(box) << " exceeds image " << image_w << "x" << image_h;
    throw Error(ErrorCode::OutOfBounds, os.str());
  }
  return NormalizedBBox{(box.x_min + box.x_max) / 2.0 / image_w, (box.y_min + box.y_max) / 2.0 / image_h,
                        box.width() / image_w, box.height() / image_h};
}

BBox denormalize(const NormalizedBBox& box, double image_w, double image_h) {
  const BBox unit = box.corners();
  return BBox{unit.x_min * image_w, unit.y_min * image_h, unit.x_max * image_w, unit.y_max * image_h};
}

}  // namespace ualp::geometry
