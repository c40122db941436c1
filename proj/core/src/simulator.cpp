#include "ualp/simulator.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "ualp/error.hpp"
#include "ualp/label_io.hpp"
#include "ualp/parallel.hpp"
#include "ualp/pgm.hpp"
#include "ualp/text_format.hpp"

namespace ualp::simulator {
namespace {

namespace fs = std::filesystem;
using dataset::ClassRole;
using dataset::Detection;
using dataset::LabelSetVariant;
using geometry::BBox;

struct LayoutComponent {
  std::string_view structure;
  Shape shape;
  double cx, cy, w, h;  // fractions of the image
};

// Canonical frontal chest layout, one row per connected component.
constexpr std::array<LayoutComponent, 14> kLayout = {{
    {"clavicle", Shape::Ellipse, 0.30, 0.14, 0.26, 0.05},
    {"clavicle", Shape::Ellipse, 0.70, 0.14, 0.26, 0.05},
    {"scapula", Shape::Ellipse, 0.11, 0.32, 0.10, 0.24},
    {"scapula", Shape::Ellipse, 0.89, 0.32, 0.10, 0.24},
    {"lung", Shape::Ellipse, 0.31, 0.47, 0.28, 0.56},
    {"lung", Shape::Ellipse, 0.69, 0.47, 0.28, 0.56},
    {"hilum", Shape::Ellipse, 0.40, 0.46, 0.08, 0.10},
    {"hilum", Shape::Ellipse, 0.60, 0.46, 0.08, 0.10},
    {"heart", Shape::Ellipse, 0.56, 0.63, 0.30, 0.22},
    {"aorta", Shape::Ellipse, 0.53, 0.30, 0.08, 0.12},
    {"diaphragm", Shape::Rectangle, 0.50, 0.80, 0.76, 0.06},
    {"mediastinum", Shape::Rectangle, 0.50, 0.42, 0.14, 0.34},
    {"trachea", Shape::Rectangle, 0.50, 0.17, 0.04, 0.14},
    {"spine", Shape::Rectangle, 0.50, 0.55, 0.06, 0.80},
}};

// Lesions are placed inside this central fraction of a lung's box.
constexpr double kLungInterior = 0.6;

double unit(std::uint64_t key, std::uint64_t n) { return rng::to_unit(rng::draw(key, n)); }

std::string_view kind_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::Nodule: return "nodule";
    case EntityKind::Anatomy: return "anatomy";
    case EntityKind::Confounder: return "confounder";
  }
  return "nodule";
}

BBox clamp_inside(BBox b, double width, double height) {
  const double w = std::min(b.width(), width);
  const double h = std::min(b.height(), height);
  b.x_min = std::clamp(b.x_min, 0.0, width - w);
  b.y_min = std::clamp(b.y_min, 0.0, height - h);
  b.x_max = b.x_min + w;
  b.y_max = b.y_min + h;
  return b;
}

BBox centered(double cx, double cy, double w, double h) { return BBox{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2}; }

// Lesion-sized entity placed inside one of the two lungs. Uses draws
// first..first+4 of `key`.
SceneEntity place_lesion(EntityKind kind, const SizeRange& size, const std::vector<SceneEntity>& lungs,
                         std::uint64_t key, std::uint64_t first) {
  const auto& lung = lungs[unit(key, first) < 0.5 ? 0 : 1].box;
  const double s = size.min_px + (size.max_px - size.min_px) * unit(key, first + 1);
  const double w = s * (0.85 + 0.3 * unit(key, first + 2));
  const double h = s;
  const double ix = lung.width() * kLungInterior;
  const double iy = lung.height() * kLungInterior;
  const double x0 = lung.x_min + (lung.width() - ix) / 2;
  const double y0 = lung.y_min + (lung.height() - iy) / 2;
  const double cx = x0 + w / 2 + std::max(0.0, ix - w) * unit(key, first + 3);
  const double cy = y0 + h / 2 + std::max(0.0, iy - h) * unit(key, first + 4);
  return SceneEntity{kind, std::string(kind == EntityKind::Nodule ? "nodule" : "confounder"), Shape::Ellipse,
                     centered(cx, cy, w, h)};
}

BBox jitter_box(const BBox& b, double scale, std::uint64_t key, std::uint64_t first, double width, double height) {
  const double cx = (b.x_min + b.x_max) / 2 + (2 * unit(key, first) - 1) * scale * b.width();
  const double cy = (b.y_min + b.y_max) / 2 + (2 * unit(key, first + 1) - 1) * scale * b.height();
  const double w = b.width() * (1 + (2 * unit(key, first + 2) - 1) * scale);
  const double h = b.height() * (1 + (2 * unit(key, first + 3) - 1) * scale);
  return clamp_inside(centered(cx, cy, w, h), width, height);
}

Detection make_detection(int class_id, double confidence, const BBox& box, double width, double height) {
  return Detection{class_id, confidence, geometry::normalize(box, width, height)};
}

}  // namespace

void SceneConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::ConfigError, "scene config: " + why); };
  if (image_size < 64) fail("image_size must be at least 64");
  if (train_images < 0 || val_images < 0 || train_images + val_images == 0) fail("image counts must be non-negative and not both zero");
  if (!(nodules_per_image >= 0.0) || !(confounders_per_image >= 0.0)) fail("entity rates must be >= 0");
  if (!(anatomy_jitter >= 0.0 && anatomy_jitter <= 0.1)) fail("anatomy_jitter must be in [0, 0.1]");
  const double lung_interior = 0.28 * kLungInterior * image_size;
  for (const auto* range : {&nodule_size, &confounder_size}) {
    if (!(range->min_px >= 2.0 && range->min_px <= range->max_px)) fail("size ranges need 2 <= min <= max");
    if (range->max_px * 1.15 > lung_interior) {
      fail("entity size " + format_significant(range->max_px) + " px does not fit inside a lung of a " +
           std::to_string(image_size) + " px image");
    }
  }
}

std::string encode_scene(const Scene& scene) {
  std::string out;
  for (const auto& e : scene.entities) {
    out += std::string(kind_name(e.kind)) + " " + e.name + " " + (e.shape == Shape::Ellipse ? "ellipse" : "rect") + " " +
           format_fixed(e.box.x_min, 6) + " " + format_fixed(e.box.y_min, 6) + " " + format_fixed(e.box.x_max, 6) +
           " " + format_fixed(e.box.y_max, 6) + "\n";
  }
  return out;
}

Scene parse_scene(std::string_view text, std::string_view source) {
  Scene scene;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    std::vector<std::string_view> tok;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && line[i] == ' ') ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ') ++i;
      if (i > start) tok.push_back(line.substr(start, i - start));
    }
    if (tok.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::ParseError, std::string(source) + ":" + std::to_string(line_no) + ": " + why);
    };
    if (tok.size() != 7) fail("expected 7 fields");
    SceneEntity e;
    if (tok[0] == "nodule") e.kind = EntityKind::Nodule;
    else if (tok[0] == "anatomy") e.kind = EntityKind::Anatomy;
    else if (tok[0] == "confounder") e.kind = EntityKind::Confounder;
    else fail("unknown entity kind");
    e.name = std::string(tok[1]);
    if (tok[2] == "ellipse") e.shape = Shape::Ellipse;
    else if (tok[2] == "rect") e.shape = Shape::Rectangle;
    else fail("unknown shape");
    std::array<double, 4> v{};
    for (std::size_t k = 0; k < 4; ++k) {
      auto [ptr, ec] = std::from_chars(tok[3 + k].data(), tok[3 + k].data() + tok[3 + k].size(), v[k]);
      if (ec != std::errc() || ptr != tok[3 + k].data() + tok[3 + k].size()) fail("bad coordinate");
    }
    e.box = BBox{v[0], v[1], v[2], v[3]};
    if (!e.box.valid()) fail("invalid box");
    scene.entities.push_back(std::move(e));
  }
  return scene;
}

void rasterize_into(geometry::PixelMask& mask, const SceneEntity& entity) {
  const auto& b = entity.box;
  const auto W = static_cast<double>(mask.width());
  const auto H = static_cast<double>(mask.height());
  const auto x_lo = static_cast<std::size_t>(std::clamp(std::floor(b.x_min), 0.0, W));
  const auto x_hi = static_cast<std::size_t>(std::clamp(std::ceil(b.x_max), 0.0, W));
  const auto y_lo = static_cast<std::size_t>(std::clamp(std::floor(b.y_min), 0.0, H));
  const auto y_hi = static_cast<std::size_t>(std::clamp(std::ceil(b.y_max), 0.0, H));
  const double cx = (b.x_min + b.x_max) / 2;
  const double cy = (b.y_min + b.y_max) / 2;
  const double rx = b.width() / 2;
  const double ry = b.height() / 2;
  for (std::size_t y = y_lo; y < y_hi; ++y) {
    const double py = static_cast<double>(y) + 0.5;
    for (std::size_t x = x_lo; x < x_hi; ++x) {
      const double px = static_cast<double>(x) + 0.5;
      bool inside = false;
      if (entity.shape == Shape::Rectangle) {
        inside = px >= b.x_min && px < b.x_max && py >= b.y_min && py < b.y_max;
      } else {
        const double dx = (px - cx) / rx;
        const double dy = (py - cy) / ry;
        inside = dx * dx + dy * dy <= 1.0;
      }
      if (inside) mask.set(x, y, 255);
    }
  }
}

geometry::PixelMask render_structure(const Scene& scene, std::string_view structure, int width, int height) {
  geometry::PixelMask mask(static_cast<std::size_t>(width), static_cast<std::size_t>(height));
  for (const auto& e : scene.entities) {
    if (e.name == structure) rasterize_into(mask, e);
  }
  return mask;
}

bool nodule_like(std::string_view structure) noexcept { return structure == "hilum"; }

std::string image_id(std::size_t index) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "img_%04zu", index);
  return buf.data();
}

Scene generate_scene(const SceneConfig& config, std::string_view id) {
  const double size = config.image_size;
  const std::uint64_t image_key = rng::derive(rng::derive(config.seed, "scene"), id);
  const std::uint64_t layout_key = rng::derive(image_key, "anatomy");

  Scene scene;
  std::vector<SceneEntity> lungs;
  for (std::size_t c = 0; c < kLayout.size(); ++c) {
    const auto& comp = kLayout[c];
    const double dx = (2 * unit(layout_key, 2 * c) - 1) * config.anatomy_jitter * size;
    const double dy = (2 * unit(layout_key, 2 * c + 1) - 1) * config.anatomy_jitter * size;
    const BBox box = clamp_inside(centered(comp.cx * size + dx, comp.cy * size + dy, comp.w * size, comp.h * size), size, size);
    SceneEntity e{EntityKind::Anatomy, std::string(comp.structure), comp.shape, box};
    if (comp.structure == "lung") lungs.push_back(e);
    scene.entities.push_back(std::move(e));
  }

  const std::uint64_t nodule_key = rng::derive(image_key, "nodules");
  const std::uint32_t nodules = rng::Stream(nodule_key).poisson(config.nodules_per_image);
  for (std::uint32_t k = 0; k < nodules; ++k) {
    scene.entities.push_back(place_lesion(EntityKind::Nodule, config.nodule_size, lungs, nodule_key, 1 + 5 * k));
  }
  const std::uint64_t confounder_key = rng::derive(image_key, "confounders");
  const std::uint32_t confounders = rng::Stream(confounder_key).poisson(config.confounders_per_image);
  for (std::uint32_t k = 0; k < confounders; ++k) {
    scene.entities.push_back(
        place_lesion(EntityKind::Confounder, config.confounder_size, lungs, confounder_key, 1 + 5 * k));
  }
  return scene;
}

dataset::DatasetManifest generate_dataset(const SceneConfig& config, const fs::path& out_dir, std::size_t workers) {
  config.validate();
  fs::create_directories(out_dir / "labels");
  fs::create_directories(out_dir / "scenes");
  if (config.write_masks) fs::create_directories(out_dir / "masks");

  dataset::DatasetManifest manifest;
  manifest.base_dir = out_dir;
  manifest.vocabulary = dataset::ClassVocabulary::default_full();
  const double total = config.train_images + config.val_images;
  manifest.split_fractions = {config.train_images / total, config.val_images / total};

  const auto n = static_cast<std::size_t>(config.train_images + config.val_images);
  manifest.images.resize(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto& rec = manifest.images[i];
    rec.id = image_id(i);
    rec.width = config.image_size;
    rec.height = config.image_size;
    rec.split = i < static_cast<std::size_t>(config.train_images) ? dataset::Split::Train : dataset::Split::Val;
    rec.labels = "labels/" + rec.id + ".txt";
    rec.scene = "scenes/" + rec.id + ".txt";

    const Scene scene = generate_scene(config, rec.id);
    write_text_file(out_dir / *rec.scene, encode_scene(scene));

    std::vector<dataset::GroundTruthObject> nodules;
    geometry::PixelMask nodule_mask(static_cast<std::size_t>(config.image_size), static_cast<std::size_t>(config.image_size));
    for (const auto& e : scene.entities) {
      if (e.kind != EntityKind::Nodule) continue;
      geometry::PixelMask single(nodule_mask.width(), nodule_mask.height());
      rasterize_into(single, e);
      rasterize_into(nodule_mask, e);
      const auto box = geometry::bbox_from_mask(single);
      nodules.push_back({0, geometry::normalize(box, config.image_size, config.image_size)});
    }
    dataset::save_labels(nodules, out_dir / rec.labels);

    if (config.write_masks) {
      const std::string nodule_path = "masks/" + rec.id + "_nodule.pgm";
      geometry::write_pgm(nodule_mask, out_dir / nodule_path);
      rec.masks["nodule"] = nodule_path;
      for (auto structure : dataset::kAnatomyStructures) {
        const std::string path = "masks/" + rec.id + "_" + std::string(structure) + ".pgm";
        geometry::write_pgm(render_structure(scene, structure, config.image_size, config.image_size), out_dir / path);
        rec.masks[std::string(structure)] = path;
      }
    }
  });
  dataset::write_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

dataset::MaskProvider scene_mask_provider(const dataset::DatasetManifest& manifest) {
  const fs::path base = manifest.base_dir;
  return [base](const dataset::ImageRecord& image, std::string_view structure) -> std::optional<geometry::PixelMask> {
    if (!image.scene) return std::nullopt;
    const Scene scene = parse_scene(read_text_file(base / *image.scene), (base / *image.scene).string());
    const bool present = std::any_of(scene.entities.begin(), scene.entities.end(),
                                     [&](const SceneEntity& e) { return e.name == structure; });
    if (!present) return std::nullopt;
    return render_structure(scene, structure, image.width, image.height);
  };
}

double ConfidenceModel::at(double u) const noexcept {
  const double k = std::pow(1.0 - std::pow(1.0 - u, 1.0 / b), 1.0 / a);
  return std::clamp(lo + (hi - lo) * std::clamp(k, 0.0, 1.0), 0.0, 1.0);
}

void DetectorProfile::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::ConfigError, std::string("detector profile: ") + name + " must be in [0,1]");
  };
  prob(nodule_hit_rate, "nodule_hit_rate");
  prob(anatomy_hit_rate, "anatomy_hit_rate");
  prob(fp_class_hit_rate, "fp_class_hit_rate");
  prob(confusion_probability, "confusion_probability");
  for (const auto* m : {&hit_confidence, &confusion_confidence, &background_confidence}) {
    if (!(m->lo >= 0.0 && m->lo <= m->hi && m->hi <= 1.0 && m->a > 0.0 && m->b > 0.0)) {
      throw Error(ErrorCode::ConfigError, "detector profile: confidence models need 0 <= lo <= hi <= 1 and a, b > 0");
    }
  }
  if (!(background_fp_rate >= 0.0)) throw Error(ErrorCode::ConfigError, "detector profile: background_fp_rate must be >= 0");
  if (!(box_jitter >= 0.0 && box_jitter < 0.5)) throw Error(ErrorCode::ConfigError, "detector profile: box_jitter must be in [0, 0.5)");
}

std::vector<Detection> simulate_image(const DetectorProfile& profile, const Scene& scene, int width, int height,
                                      std::string_view id, std::uint64_t seed) {
  // Per-entity draw counters. Every profile reads the same counter for the
  // same purpose, so variants sharing a seed share their randomness.
  enum : std::uint64_t {
    kHit = 0, kHitConfidence = 1, kHitJitter = 2,  // 2..5
    kConfuse = 6, kConfusionConfidence = 7, kConfusionJitter = 8,  // 8..11
    kFpClassHit = 12, kFpClassConfidence = 13,
  };

  std::vector<int> old_to_new;
  const auto full = dataset::ClassVocabulary::default_full();
  const auto vocab = dataset::compose_vocabulary(full, profile.variant, &old_to_new);
  auto class_of = [&](std::string_view name) -> int {
    const auto id = full.find(name);
    return id ? old_to_new[static_cast<std::size_t>(*id)] : -1;
  };
  const int nodule_class = vocab.target_id();
  const int fp_class = profile.upost_learned ? class_of("fp") : -1;

  const double W = width;
  const double H = height;
  const std::uint64_t detector_key = rng::derive(seed, id);
  std::vector<Detection> out;

  auto confuse = [&](const SceneEntity& e, std::uint64_t key) {
    if (unit(key, kConfuse) >= profile.confusion_probability) return;
    BBox box = e.box;
    if (e.kind == EntityKind::Anatomy) {
      // A nodule-sized blob at the structure's center.
      box = centered((box.x_min + box.x_max) / 2, (box.y_min + box.y_max) / 2, box.width() * 0.5, box.height() * 0.5);
    }
    out.push_back(make_detection(nodule_class, profile.confusion_confidence.at(unit(key, kConfusionConfidence)),
                                 jitter_box(box, profile.box_jitter, key, kConfusionJitter, W, H), W, H));
  };

  for (std::size_t e = 0; e < scene.entities.size(); ++e) {
    const auto& entity = scene.entities[e];
    const std::uint64_t key = rng::derive(detector_key, e);
    switch (entity.kind) {
      case EntityKind::Nodule:
        if (unit(key, kHit) < profile.nodule_hit_rate) {
          out.push_back(make_detection(nodule_class, profile.hit_confidence.at(unit(key, kHitConfidence)),
                                       jitter_box(entity.box, profile.box_jitter, key, kHitJitter, W, H), W, H));
        }
        break;
      case EntityKind::Anatomy: {
        const int cls = class_of(entity.name);
        if (cls >= 0) {
          if (unit(key, kHit) < profile.anatomy_hit_rate) {
            out.push_back(make_detection(cls, profile.hit_confidence.at(unit(key, kHitConfidence)),
                                         jitter_box(entity.box, profile.box_jitter, key, kHitJitter, W, H), W, H));
          }
        } else if (nodule_like(entity.name)) {
          confuse(entity, key);
        }
        break;
      }
      case EntityKind::Confounder:
        if (fp_class >= 0) {
          if (unit(key, kFpClassHit) < profile.fp_class_hit_rate) {
            out.push_back(make_detection(fp_class, profile.hit_confidence.at(unit(key, kFpClassConfidence)),
                                         jitter_box(entity.box, profile.box_jitter, key, kHitJitter, W, H), W, H));
            break;
          }
        }
        confuse(entity, key);
        break;
    }
  }

  rng::Stream background(rng::derive(detector_key, "background"));
  const std::uint32_t count = background.poisson(profile.background_fp_rate);
  const double lo = std::min(12.0, W / 4);
  const double hi = std::min(40.0, W / 2);
  for (std::uint32_t k = 0; k < count; ++k) {
    const double s = background.uniform(lo, hi);
    const double cx = background.uniform(s / 2, W - s / 2);
    const double cy = background.uniform(s / 2, H - s / 2);
    const double conf = profile.background_confidence.at(background.uniform());
    background.uniform();  // reserved: keeps five draws per background box
    out.push_back(make_detection(nodule_class, conf, clamp_inside(centered(cx, cy, s, s), W, H), W, H));
  }
  return out;
}

std::vector<std::optional<std::vector<Detection>>> simulate_detector(const DetectorProfile& profile,
                                                                     const dataset::DatasetManifest& manifest,
                                                                     std::uint64_t seed,
                                                                     std::optional<dataset::Split> split,
                                                                     std::size_t workers) {
  profile.validate();
  std::vector<std::optional<std::vector<Detection>>> out(manifest.images.size());
  parallel_for(manifest.images.size(), workers, [&](std::size_t i) {
    const auto& image = manifest.images[i];
    if (split && image.split != *split) return;
    if (!image.scene) throw Error(ErrorCode::ConfigError, "image " + image.id + " has no scene file; simulate needs a generated dataset");
    const auto path = manifest.resolve(*image.scene);
    const Scene scene = parse_scene(read_text_file(path), path.string());
    out[i] = simulate_image(profile, scene, image.width, image.height, image.id, seed);
  });
  return out;
}

dataset::DatasetManifest write_predictions(const dataset::DatasetManifest& manifest,
                                           const std::vector<std::optional<std::vector<Detection>>>& predictions,
                                           const fs::path& out_dir) {
  fs::create_directories(out_dir / "predictions");
  auto out = dataset::rebase_manifest(manifest, out_dir);
  for (std::size_t i = 0; i < out.images.size(); ++i) {
    auto& image = out.images[i];
    if (i >= predictions.size() || !predictions[i]) {
      image.predictions.reset();
      continue;
    }
    image.predictions = "predictions/" + image.id + ".txt";
    dataset::save_predictions(*predictions[i], out_dir / *image.predictions);
  }
  dataset::write_manifest(out, out_dir / "manifest.json");
  return out;
}

}  // namespace ualp::simulator
