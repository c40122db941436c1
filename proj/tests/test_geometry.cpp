#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ualp/error.hpp"
#include "ualp/geometry.hpp"
#include "ualp/pgm.hpp"

using namespace ualp::geometry;
using ualp::Error;
using ualp::ErrorCode;

namespace {

PixelMask mask_from_rows(const std::vector<std::string>& rows) {
  PixelMask m(rows.front().size(), rows.size());
  for (std::size_t y = 0; y < rows.size(); ++y) {
    for (std::size_t x = 0; x < rows[y].size(); ++x) m.set(x, y, rows[y][x] == '#' ? 255 : 0);
  }
  return m;
}

PixelMask two_blobs() {
  PixelMask m(16, 16);
  for (int y = 2; y <= 4; ++y)
    for (int x = 2; x <= 4; ++x) m.set(x, y, 255);
  for (int y = 10; y <= 12; ++y)
    for (int x = 10; x <= 12; ++x) m.set(x, y, 255);
  return m;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::IoError;
}

}  // namespace

TEST(BBox, MakeRejectsDegenerateAndNegative) {
  EXPECT_EQ(code_of([] { BBox::make(0, 0, 0, 5); }), ErrorCode::InvalidBox);
  EXPECT_EQ(code_of([] { BBox::make(5, 0, 4, 5); }), ErrorCode::InvalidBox);
  EXPECT_EQ(code_of([] { BBox::make(-1, 0, 4, 5); }), ErrorCode::InvalidBox);
  EXPECT_EQ(code_of([] { BBox::make(0, 0, std::numeric_limits<double>::infinity(), 5); }), ErrorCode::InvalidBox);
  EXPECT_DOUBLE_EQ(BBox::make(1, 2, 4, 6).area(), 12.0);
}

TEST(Iou, WorkedExamples) {
  EXPECT_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_EQ(iou({0, 0, 10, 10}, {20, 20, 30, 30}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {5, 5, 15, 15}), 25.0 / 175.0);
  EXPECT_EQ(iou({0, 0, 10, 10}, {5, 5, 15, 15}), ualp::oracle::pixel_iou({0, 0, 10, 10}, {5, 5, 15, 15}));
}

TEST(Iou, TouchingEdgesDoNotOverlap) { EXPECT_EQ(iou({0, 0, 10, 10}, {10, 0, 20, 10}), 0.0); }

TEST(Iou, PropertiesOnRandomBoxes) {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> coord(0, 60);
  auto random_box = [&] {
    int x0 = coord(gen), x1 = coord(gen), y0 = coord(gen), y1 = coord(gen);
    if (x0 == x1) ++x1;
    if (y0 == y1) ++y1;
    return BBox{double(std::min(x0, x1)), double(std::min(y0, y1)), double(std::max(x0, x1)), double(std::max(y0, y1))};
  };
  for (int i = 0; i < 300; ++i) {
    const BBox a = random_box();
    const BBox b = random_box();
    const double v = iou(a, b);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(iou(a, a), 1.0);
    EXPECT_EQ(v, ualp::oracle::pixel_iou(a, b));
    const BBox as{a.x_min + 13.25, a.y_min + 7.5, a.x_max + 13.25, a.y_max + 7.5};
    const BBox bs{b.x_min + 13.25, b.y_min + 7.5, b.x_max + 13.25, b.y_max + 7.5};
    EXPECT_NEAR(iou(as, bs), v, 1e-12);
  }
}

TEST(MaskIou, WorkedExamples) {
  const auto a = two_blobs();
  EXPECT_EQ(mask_iou(a, a), 1.0);
  EXPECT_EQ(mask_iou(a, PixelMask(16, 16)), 0.0);
  EXPECT_EQ(mask_iou(PixelMask(4, 4), PixelMask(4, 4)), 1.0);

  // 6 + 6 pixels with 3 shared: union 9.
  const auto m1 = mask_from_rows({"######..", "........", "........", "........", "........", "........",
                                  "........", "........"});
  const auto m2 = mask_from_rows({"...#####", "#.......", "........", "........", "........", "........",
                                  "........", "........"});
  EXPECT_DOUBLE_EQ(mask_iou(m1, m2), 3.0 / 9.0);
}

TEST(MaskIou, AnyNonzeroByteIsForeground) {
  PixelMask a(3, 1, {0, 1, 255});
  PixelMask b(3, 1, {0, 255, 7});
  EXPECT_EQ(mask_iou(a, b), 1.0);
}

TEST(MaskIou, DimensionMismatch) {
  EXPECT_EQ(code_of([] { mask_iou(PixelMask(4, 4), PixelMask(4, 5)); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { PixelMask(3, 3, std::vector<std::uint8_t>(8)); }), ErrorCode::DimensionMismatch);
}

TEST(BboxFromMask, WorkedExamples) {
  EXPECT_EQ(code_of([] { bbox_from_mask(PixelMask(8, 8)); }), ErrorCode::NoForeground);
  PixelMask single(10, 10);
  single.set(3, 7, 1);
  EXPECT_EQ(bbox_from_mask(single), (BBox{3, 7, 4, 8}));
  EXPECT_EQ(bbox_from_mask(two_blobs()), (BBox{2, 2, 13, 13}));
}

TEST(BboxFromMask, MatchesScanOracleAndComponentUnion) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t w = 5 + gen() % 40;
    const std::size_t h = 5 + gen() % 40;
    PixelMask m(w, h);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) m.set(x, y, gen() % 9 == 0 ? 255 : 0);
    m.set(gen() % w, gen() % h, 255);
    double x0 = 1e9, y0 = 1e9, x1 = -1, y1 = -1;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        if (m.foreground(x, y)) {
          x0 = std::min(x0, double(x));
          y0 = std::min(y0, double(y));
          x1 = std::max(x1, double(x + 1));
          y1 = std::max(y1, double(y + 1));
        }
    const BBox tight = bbox_from_mask(m);
    EXPECT_EQ(tight, (BBox{x0, y0, x1, y1}));
    BBox uni{1e9, 1e9, -1, -1};
    for (const auto& c : components_from_mask(m, Connectivity::Four, 1)) {
      uni = {std::min(uni.x_min, c.x_min), std::min(uni.y_min, c.y_min), std::max(uni.x_max, c.x_max),
             std::max(uni.y_max, c.y_max)};
    }
    EXPECT_EQ(tight, uni);
  }
}

TEST(Components, WorkedExamples) {
  EXPECT_TRUE(components_from_mask(PixelMask(8, 8), Connectivity::Eight, 1).empty());
  const auto boxes = components_from_mask(two_blobs(), Connectivity::Eight, 1);
  ASSERT_EQ(boxes.size(), 2u);
  EXPECT_EQ(boxes[0], (BBox{2, 2, 5, 5}));
  EXPECT_EQ(boxes[1], (BBox{10, 10, 13, 13}));

  PixelMask diag(2, 2);
  diag.set(0, 0, 1);
  diag.set(1, 1, 1);
  EXPECT_EQ(components_from_mask(diag, Connectivity::Eight, 1).size(), 1u);
  EXPECT_EQ(components_from_mask(diag, Connectivity::Four, 1).size(), 2u);
}

TEST(Components, MinAreaDropsSpeckle) {
  auto m = two_blobs();
  m.set(0, 15, 255);
  m.set(1, 15, 255);
  m.set(2, 15, 255);
  EXPECT_EQ(components_from_mask(m, ComponentConfig{}).size(), 2u);
  EXPECT_EQ(components_from_mask(m, Connectivity::Eight, 1).size(), 3u);
  EXPECT_EQ(components_from_mask(m, Connectivity::Eight, 10).size(), 0u);
}

TEST(Components, SortedByRowThenColumn) {
  const auto m = mask_from_rows({"....##", "....##", "##....", "##....", "...##.", "...##."});
  const auto boxes = components_from_mask(m, Connectivity::Four, 1);
  ASSERT_EQ(boxes.size(), 3u);
  EXPECT_EQ(boxes[0], (BBox{4, 0, 6, 2}));
  EXPECT_EQ(boxes[1], (BBox{0, 2, 2, 4}));
  EXPECT_EQ(boxes[2], (BBox{3, 4, 5, 6}));
}

TEST(Components, PartitionForegroundAndMatchFloodFill) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t w = 1 + gen() % 48;
    const std::size_t h = 1 + gen() % 48;
    PixelMask m(w, h);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) m.set(x, y, gen() % 3 == 0 ? 200 : 0);
    for (int conn : {4, 8}) {
      const auto c = conn == 4 ? Connectivity::Four : Connectivity::Eight;
      EXPECT_EQ(components_from_mask(m, c, 1), ualp::oracle::flood_fill_components(m, conn, 1));
      EXPECT_EQ(components_from_mask(m, c, 5), ualp::oracle::flood_fill_components(m, conn, 5));
    }
    // Every foreground pixel falls in some component box.
    const auto boxes = components_from_mask(m, Connectivity::Four, 1);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        if (!m.foreground(x, y)) continue;
        const bool covered = std::any_of(boxes.begin(), boxes.end(), [&](const BBox& b) {
          return x >= b.x_min && x < b.x_max && y >= b.y_min && y < b.y_max;
        });
        EXPECT_TRUE(covered);
      }
  }
}

TEST(Normalize, WorkedExamples) {
  const auto full = normalize({0, 0, 512, 512}, 512, 512);
  EXPECT_EQ(full, (NormalizedBBox{0.5, 0.5, 1.0, 1.0}));
  const auto mid = normalize({128, 128, 384, 384}, 512, 512);
  EXPECT_EQ(mid, (NormalizedBBox{0.5, 0.5, 0.5, 0.5}));
  EXPECT_EQ(code_of([] { normalize({0, 0, 513, 10}, 512, 512); }), ErrorCode::OutOfBounds);
}

TEST(Normalize, RoundTripWithinMicroPixel) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 512.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double x0 = u(gen), x1 = u(gen), y0 = u(gen), y1 = u(gen);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    if (x1 - x0 < 1e-3 || y1 - y0 < 1e-3) continue;
    const BBox b{x0, y0, x1, y1};
    const BBox r = denormalize(normalize(b, 512, 512), 512, 512);
    worst = std::max({worst, std::abs(r.x_min - x0), std::abs(r.y_min - y0), std::abs(r.x_max - x1),
                      std::abs(r.y_max - y1)});
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(NormalizedBBox, EdgeTolerance) {
  EXPECT_TRUE((NormalizedBBox{0.5000005, 0.5, 1.0, 1.0}).valid());
  EXPECT_FALSE((NormalizedBBox{0.51, 0.5, 1.0, 1.0}).valid());
  EXPECT_FALSE((NormalizedBBox{0.5, 0.5, 0.0, 0.1}).valid());
  EXPECT_EQ(code_of([] { NormalizedBBox::make(0.5, 0.5, 1.2, 0.1); }), ErrorCode::InvalidBox);
}

TEST(Pgm, RoundTripAndErrors) {
  const auto m = two_blobs();
  const std::string bytes = encode_pgm(m);
  EXPECT_EQ(bytes.substr(0, 3), "P5\n");
  EXPECT_EQ(parse_pgm(bytes), m);
  EXPECT_EQ(code_of([] { parse_pgm("P2\n2 2\n255\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_pgm("P5\n2 2\n255\nab"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_pgm("P5\n2 2\n15\nabcd"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { read_pgm("/nonexistent/dir/x.pgm"); }), ErrorCode::IoError);
  try {
    parse_pgm("P5\n# c\n2 2\n255\nabcd", "lung.pgm");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("lung.pgm"), std::string::npos);
  }
}
