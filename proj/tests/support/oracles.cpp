#include "oracles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include <unistd.h>

namespace ualp::oracle {

double pixel_iou(const geometry::BBox& a, const geometry::BBox& b) {
  const long x0 = static_cast<long>(std::min(a.x_min, b.x_min));
  const long y0 = static_cast<long>(std::min(a.y_min, b.y_min));
  const long x1 = static_cast<long>(std::max(a.x_max, b.x_max));
  const long y1 = static_cast<long>(std::max(a.y_max, b.y_max));
  auto covers = [](const geometry::BBox& box, long x, long y) {
    return x >= box.x_min && x < box.x_max && y >= box.y_min && y < box.y_max;
  };
  long inter = 0;
  long uni = 0;
  for (long y = y0; y < y1; ++y) {
    for (long x = x0; x < x1; ++x) {
      const bool in_a = covers(a, x, y);
      const bool in_b = covers(b, x, y);
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<geometry::BBox> flood_fill_components(const geometry::PixelMask& mask, int connectivity,
                                                  std::size_t min_area) {
  const long w = static_cast<long>(mask.width());
  const long h = static_cast<long>(mask.height());
  std::vector<int> seen(static_cast<std::size_t>(w * h), 0);
  struct Found {
    geometry::BBox box;
    long first;
  };
  std::vector<Found> found;
  for (long start = 0; start < w * h; ++start) {
    if (seen[start] || !mask.foreground(start % w, start / w)) continue;
    std::vector<long> stack{start};
    seen[start] = 1;
    long xmin = w, ymin = h, xmax = -1, ymax = -1;
    std::size_t area = 0;
    while (!stack.empty()) {
      const long p = stack.back();
      stack.pop_back();
      const long x = p % w;
      const long y = p / w;
      ++area;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (connectivity == 4 && dx != 0 && dy != 0) continue;
          const long nx = x + dx;
          const long ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const long q = ny * w + nx;
          if (!seen[q] && mask.foreground(nx, ny)) {
            seen[q] = 1;
            stack.push_back(q);
          }
        }
      }
    }
    if (area >= min_area) {
      found.push_back({{double(xmin), double(ymin), double(xmax + 1), double(ymax + 1)}, start});
    }
  }
  std::sort(found.begin(), found.end(), [](const Found& a, const Found& b) {
    return std::tuple(a.box.y_min, a.box.x_min, a.first) < std::tuple(b.box.y_min, b.box.x_min, b.first);
  });
  std::vector<geometry::BBox> out;
  for (const auto& f : found) out.push_back(f.box);
  return out;
}

namespace {

struct Corners {
  double x0, y0, x1, y1;
};

Corners corners(const geometry::NormalizedBBox& b) {
  auto c = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return {c(b.cx - b.w / 2), c(b.cy - b.h / 2), c(b.cx + b.w / 2), c(b.cy + b.h / 2)};
}

double box_iou(const Corners& a, const Corners& b) {
  const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = iw * ih;
  const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::pair<std::size_t, std::size_t> rematch(const metrics::ImageEvaluation& image, double threshold, double iou_threshold,
                                            int target_class) {
  std::vector<const dataset::Detection*> dets;
  for (const auto& d : image.detections) {
    if (d.class_id == target_class && d.confidence >= threshold) dets.push_back(&d);
  }
  std::vector<Corners> truths;
  for (const auto& t : image.truths) {
    if (t.class_id == target_class) truths.push_back(corners(t.box));
  }
  std::vector<bool> used(truths.size(), false);
  std::vector<bool> done(dets.size(), false);
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t round = 0; round < dets.size(); ++round) {
    // Pick the next detection by scanning for the canonical minimum.
    std::size_t pick = dets.size();
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (done[i]) continue;
      if (pick == dets.size()) {
        pick = i;
        continue;
      }
      const auto key = [](const dataset::Detection* d) {
        const auto& b = d->box;
        return std::tuple(-d->confidence, b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2);
      };
      if (key(dets[i]) < key(dets[pick])) pick = i;
    }
    done[pick] = true;
    const Corners box = corners(dets[pick]->box);
    double best = -1.0;
    std::size_t best_t = 0;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (used[t]) continue;
      const double v = box_iou(box, truths[t]);
      if (v > best) {
        best = v;
        best_t = t;
      }
    }
    if (best >= iou_threshold) {
      used[best_t] = true;
      ++tp;
    } else {
      ++fp;
    }
  }
  return {tp, fp};
}

}  // namespace

std::vector<SweepPoint> brute_force_sweep(const metrics::EvaluationSet& set, double iou_threshold, int target_class) {
  std::vector<double> thresholds;
  for (const auto& image : set) {
    for (const auto& d : image.detections) {
      if (d.class_id == target_class) thresholds.push_back(d.confidence);
    }
  }
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.insert(thresholds.begin(), std::nextafter(1.0, 2.0));

  std::vector<SweepPoint> out;
  for (double t : thresholds) {
    SweepPoint p{t, 0, 0};
    for (const auto& image : set) {
      const auto [tp, fp] = rematch(image, t, iou_threshold, target_class);
      p.tp += tp;
      p.fp += fp;
    }
    out.push_back(p);
  }
  return out;
}

std::size_t truth_count(const metrics::EvaluationSet& set, int target_class) {
  std::size_t n = 0;
  for (const auto& image : set) {
    for (const auto& t : image.truths) n += t.class_id == target_class;
  }
  return n;
}

double trapezoid(std::vector<std::pair<double, double>> xy) {
  std::stable_sort(xy.begin(), xy.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double area = 0.0;
  for (std::size_t i = 1; i < xy.size(); ++i) {
    area += (xy[i].first - xy[i - 1].first) * (xy[i].second + xy[i - 1].second) / 2.0;
  }
  return area;
}

double riemann_froc_auc(const std::vector<std::pair<double, double>>& xy, double cap, std::size_t cells) {
  auto value_at = [&](double x) {
    // Last point at or left of x, first point right of it.
    std::size_t left = 0;
    for (std::size_t i = 0; i < xy.size(); ++i) {
      if (xy[i].first <= x) left = i;
    }
    for (std::size_t i = left + 1; i < xy.size(); ++i) {
      if (xy[i].first > x) {
        const auto [x0, y0] = xy[left];
        const auto [x1, y1] = xy[i];
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
      }
    }
    return xy[left].second;
  };
  const double step = cap / static_cast<double>(cells);
  double sum = 0.0;
  for (std::size_t k = 0; k < cells; ++k) sum += value_at((static_cast<double>(k) + 0.5) * step) * step;
  return sum / cap;
}

}  // namespace ualp::oracle

namespace ualp::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("ualp_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> list_files(const std::filesystem::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(std::filesystem::relative(e.path(), dir).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ualp::testing
