// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "amodal/errors.hpp"

namespace amodal {

namespace {

struct Rgb {
  uint8_t r, g, b;
};

// Base fill per category; appearance is informative of category while the
// silhouette carries the shape prior.
Rgb category_color(int category_id) {
  switch ((category_id - 1) % 5) {
    case 0: return {88, 170, 80};    // ellipse: green
    case 1: return {222, 140, 44};   // star: orange
    case 2: return {70, 120, 210};   // capsule: blue
    case 3: return {150, 90, 190};   // rounded rect: purple
    default: return {208, 196, 60};  // l-shape: yellow
  }
}

bool inside_shape(ShapeTemplate::Kind kind, double x, double y, double r) {
  switch (kind) {
    case ShapeTemplate::Kind::Ellipse: {
      const double a = r, b = 0.72 * r;
      return (x * x) / (a * a) + (y * y) / (b * b) <= 1.0;
    }
    case ShapeTemplate::Kind::Star: {
      const double rho = std::hypot(x, y);
      const double theta = std::atan2(y, x);
      const double rad = r * (0.58 + 0.42 * std::cos(5.0 * theta));
      return rho <= rad;
    }
    case ShapeTemplate::Kind::Capsule: {
      const double half_len = r;
      const double radius = r / 3.0;
      const double cx = std::clamp(x, -half_len, half_len);
      return std::hypot(x - cx, y) <= radius;
    }
    case ShapeTemplate::Kind::RoundedRect: {
      const double hx = r, hy = 0.62 * r, corner = 0.35 * r;
      const double dx = std::max(std::abs(x) - (hx - corner), 0.0);
      const double dy = std::max(std::abs(y) - (hy - corner), 0.0);
      return std::hypot(dx, dy) <= corner;
    }
    case ShapeTemplate::Kind::LShape: {
      const bool vertical = x >= -r && x <= -0.25 * r && y >= -r && y <= r;
      const bool horizontal = x >= -r && x <= r && y >= 0.25 * r && y <= r;
      return vertical || horizontal;
    }
  }
  return false;
}

Mask subtract(const Mask& a, const Mask& b) {
  Mask out = a;
  for (int i = 0; i < out.size(); ++i) {
    if (b.data()[i] >= 0.5) out.data()[i] = 0.0;
  }
  return out;
}

void add_into(Mask& acc, const Mask& m) {
  for (int i = 0; i < acc.size(); ++i) {
    if (m.data()[i] >= 0.5) acc.data()[i] = 1.0;
  }
}

struct PlacedInstance {
  int category_id = 0;
  int fill_category_id = 0;
  Mask amodal;
  double brightness = 1.0;
};

struct PoseSampler {
  std::mt19937_64& rng;
  const SceneSpec& spec;

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  int uniform_int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  }
};

// Paint one instance's visible pixels: flat category color modulated by
// per-instance brightness plus per-pixel noise.
void paint_instance(Image& img, const Mask& visible, int fill_category,
                    double brightness, double noise_amp,
                    std::mt19937_64& rng) {
  const Rgb base = category_color(fill_category);
  std::uniform_real_distribution<double> noise(-noise_amp, noise_amp);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (visible.at(y, x) < 0.5) continue;
      const double n = noise(rng);
      auto ch = [&](double v) {
        return static_cast<uint8_t>(std::clamp(v * brightness + n, 0.0, 255.0));
      };
      img.set_pixel(y, x, ch(base.r), ch(base.g), ch(base.b));
    }
  }
}

Scene assemble_scene(const SceneSpec& spec,
                     std::vector<PlacedInstance> placed,
                     std::mt19937_64& rng) {
  Scene scene;
  scene.image = Image(spec.canvas_w, spec.canvas_h, 30, 30, 34);
  // Background speckle.
  std::uniform_int_distribution<int> bg_noise(-6, 6);
  for (int y = 0; y < spec.canvas_h; ++y) {
    for (int x = 0; x < spec.canvas_w; ++x) {
      const int n = bg_noise(rng);
      const uint8_t* p = scene.image.pixel(y, x);
      scene.image.set_pixel(
          y, x, static_cast<uint8_t>(std::clamp(p[0] + n, 0, 255)),
          static_cast<uint8_t>(std::clamp(p[1] + n, 0, 255)),
          static_cast<uint8_t>(std::clamp(p[2] + n, 0, 255)));
    }
  }

  // Back-to-front: visible mask = amodal minus union of everything above.
  const int n = static_cast<int>(placed.size());
  std::vector<Mask> visible(n);
  Mask above(spec.canvas_h, spec.canvas_w);
  for (int i = n - 1; i >= 0; --i) {
    visible[i] = subtract(placed[i].amodal, above);
    add_into(above, placed[i].amodal);
  }
  for (int i = 0; i < n; ++i) {
    paint_instance(scene.image, visible[i], placed[i].fill_category_id,
                   placed[i].brightness, spec.noise_amplitude, rng);
    const double amodal_area = mask_area(placed[i].amodal);
    if (amodal_area <= 0.0) continue;
    const double rate = occlusion_rate(visible[i], placed[i].amodal);
    if (rate >= spec.drop_occlusion) continue;  // nearly invisible: drop
    InstanceAnnotation ann;
    ann.category_id = placed[i].category_id;
    ann.amodal_mask = placed[i].amodal;
    ann.visible_mask = visible[i];
    ann.occlusion_rate = rate;
    ann.box = tight_box(ann.amodal_mask);
    scene.annotations.push_back(std::move(ann));
  }
  return scene;
}

PlacedInstance sample_instance(PoseSampler& s,
                               const std::vector<ShapeTemplate>& templates,
                               double min_area) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    const auto& t = templates[static_cast<size_t>(
        s.uniform_int(0, static_cast<int>(templates.size()) - 1))];
    const double scale = s.uniform(t.min_scale, t.max_scale);
    const double rot = s.uniform(0.0, 2.0 * std::numbers::pi);
    const double cx = s.uniform(0.18 * s.spec.canvas_w, 0.82 * s.spec.canvas_w);
    const double cy = s.uniform(0.18 * s.spec.canvas_h, 0.82 * s.spec.canvas_h);
    Mask m;
    try {
      m = render_template(t, scale, rot, cx, cy, s.spec.canvas_h,
                          s.spec.canvas_w);
    } catch (const PlacementError&) {
      continue;
    }
    if (mask_area(m) < min_area) continue;
    PlacedInstance out;
    out.category_id = t.category_id;
    out.fill_category_id = t.category_id;
    out.amodal = std::move(m);
    out.brightness = s.uniform(0.8, 1.15);
    return out;
  }
  return PlacedInstance{};  // empty amodal signals failure; caller skips
}

}  // namespace

std::vector<ShapeTemplate> default_templates(int categories) {
  using Kind = ShapeTemplate::Kind;
  static const std::vector<std::pair<std::string, Kind>> kinds = {
      {"ellipse", Kind::Ellipse},
      {"star", Kind::Star},
      {"capsule", Kind::Capsule},
      {"rounded_rect", Kind::RoundedRect},
      {"l_shape", Kind::LShape},
  };
  if (categories < 1 || categories > static_cast<int>(kinds.size())) {
    throw ConfigError("default_templates: categories must be in [1, " +
                      std::to_string(kinds.size()) + "]");
  }
  std::vector<ShapeTemplate> out;
  for (int i = 0; i < categories; ++i) {
    ShapeTemplate t;
    t.category_id = i + 1;
    t.name = kinds[i].first;
    t.kind = kinds[i].second;
    out.push_back(t);
  }
  return out;
}

Mask render_template(const ShapeTemplate& t, double scale, double rotation,
                     double center_x, double center_y, int canvas_h,
                     int canvas_w) {
  Mask m(canvas_h, canvas_w);
  const double cosr = std::cos(rotation);
  const double sinr = std::sin(rotation);
  bool any = false;
  for (int y = 0; y < canvas_h; ++y) {
    for (int x = 0; x < canvas_w; ++x) {
      const double dx = (x + 0.5) - center_x;
      const double dy = (y + 0.5) - center_y;
      // Rotate the canvas offset back into the shape's local frame.
      const double lx = cosr * dx + sinr * dy;
      const double ly = -sinr * dx + cosr * dy;
      if (inside_shape(t.kind, lx, ly, scale)) {
        m.at(y, x) = 1.0;
        any = true;
      }
    }
  }
  if (!any) {
    throw PlacementError("render_template: shape entirely off canvas");
  }
  return m;
}

Scene composite_scene(const SceneSpec& spec,
                      const std::vector<ShapeTemplate>& templates) {
  if (templates.empty()) {
    throw ConfigError("composite_scene: no templates");
  }
  std::mt19937_64 rng(spec.seed);
  PoseSampler sampler{rng, spec};
  const int count = sampler.uniform_int(spec.min_instances, spec.max_instances);
  std::vector<PlacedInstance> placed;
  for (int i = 0; i < count; ++i) {
    PlacedInstance inst = sample_instance(sampler, templates, 40.0);
    if (inst.amodal.size() == 0) continue;  // retries exhausted
    placed.push_back(std::move(inst));
  }
  return assemble_scene(spec, std::move(placed), rng);
}

std::vector<ScenePair> make_invariance_pairs(
    const SceneSpec& spec, int n_pairs,
    const std::vector<ShapeTemplate>& templates) {
  if (n_pairs < 1) throw ConfigError("make_invariance_pairs: n_pairs >= 1");
  if (templates.size() < 2) {
    throw ConfigError("make_invariance_pairs: need >= 2 categories");
  }
  std::vector<ScenePair> pairs;
  for (int p = 0; p < n_pairs; ++p) {
    std::mt19937_64 rng(derive_seed(spec.seed, 0x70616972 /*'pair'*/, p));
    PoseSampler sampler{rng, spec};

    PlacedInstance target;
    Mask occluder_mask;
    double occ_rate = 0.0;
    int occluder_template = 0;
    // Retry until the occluder hides a meaningful but partial region.
    for (int attempt = 0; attempt < 64; ++attempt) {
      target = sample_instance(sampler, templates, 60.0);
      if (target.amodal.size() == 0) continue;
      const BoundingBox tb = tight_box(target.amodal);
      const double tx = 0.5 * (tb.x_min + tb.x_max);
      const double ty = 0.5 * (tb.y_min + tb.y_max);
      occluder_template =
          sampler.uniform_int(0, static_cast<int>(templates.size()) - 1);
      const auto& ot = templates[static_cast<size_t>(occluder_template)];
      const double oscale = sampler.uniform(ot.min_scale, ot.max_scale);
      const double orot = sampler.uniform(0.0, 2.0 * std::numbers::pi);
      const double off = sampler.uniform(0.4, 0.9) * oscale;
      const double ang = sampler.uniform(0.0, 2.0 * std::numbers::pi);
      try {
        occluder_mask =
            render_template(ot, oscale, orot, tx + off * std::cos(ang),
                            ty + off * std::sin(ang), spec.canvas_h,
                            spec.canvas_w);
      } catch (const PlacementError&) {
        continue;
      }
      const Mask vis = subtract(target.amodal, occluder_mask);
      occ_rate = occlusion_rate(vis, target.amodal);
      if (occ_rate >= 0.2 && occ_rate <= 0.7) break;
      occluder_mask = Mask();
    }
    if (occluder_mask.size() == 0) {
      throw BuildError("make_invariance_pairs: could not place pair " +
                       std::to_string(p));
    }

    // The two occluder appearances: original category vs a different one.
    const int fill_a = templates[static_cast<size_t>(occluder_template)].category_id;
    int fill_b = fill_a;
    while (fill_b == fill_a) {
      fill_b = templates[static_cast<size_t>(sampler.uniform_int(
                             0, static_cast<int>(templates.size()) - 1))]
                   .category_id;
    }
    const double occ_brightness = sampler.uniform(0.8, 1.15);
    const uint64_t paint_seed = rng();

    auto build = [&](int fill_category) {
      PlacedInstance occ;
      occ.category_id = fill_category;
      occ.fill_category_id = fill_category;
      occ.amodal = occluder_mask;
      occ.brightness = occ_brightness;
      std::mt19937_64 paint_rng(paint_seed);
      // Same paint stream for both scenes of the pair: the background and
      // the target pixels are byte-identical, only occluder color changes.
      return assemble_scene(spec, {target, occ}, paint_rng);
    };

    ScenePair pair;
    pair.a = build(fill_a);
    pair.b = build(fill_b);
    pair.target_index_a = 0;
    pair.target_index_b = 0;
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

uint64_t derive_seed(uint64_t seed, uint64_t salt, uint64_t index) {
  auto mix = [](uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  };
  return mix(mix(seed ^ mix(salt)) ^ index);
}

namespace {

void write_split(const std::filesystem::path& dir, const GenerateConfig& cfg,
                 uint64_t salt, int n_scenes,
                 const std::vector<ShapeTemplate>& templates,
                 std::vector<Category> categories) {
  std::filesystem::create_directories(dir / "images");
  std::vector<SceneRecord> records;
  int next_ann_id = 1;
  for (int i = 0; i < n_scenes; ++i) {
    SceneSpec spec;
    spec.canvas_w = cfg.canvas;
    spec.canvas_h = cfg.canvas;
    spec.categories = cfg.categories;
    spec.min_instances = cfg.min_instances;
    spec.max_instances = cfg.max_instances;
    spec.seed = derive_seed(cfg.seed, salt, static_cast<uint64_t>(i));
    Scene scene = composite_scene(spec, templates);

    SceneRecord rec;
    rec.image_id = i + 1;
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%06d.png", i + 1);
    rec.file_name = name;
    rec.width = spec.canvas_w;
    rec.height = spec.canvas_h;
    for (const auto& ann : scene.annotations) {
      DatasetInstance inst;
      inst.id = next_ann_id++;
      inst.category_id = ann.category_id;
      inst.box = ann.box;
      inst.amodal_seg = rle_encode(ann.amodal_mask);
      inst.visible_seg = rle_encode(ann.visible_mask);
      inst.occlusion_rate = ann.occlusion_rate;
      rec.instances.push_back(std::move(inst));
    }
    write_png(dir / "images" / rec.file_name, scene.image);
    records.push_back(std::move(rec));
  }
  write_dataset_json(dir / "annotations.json", records, categories, cfg.seed);
}

}  // namespace

void generate_dataset(const GenerateConfig& cfg) {
  const auto templates = default_templates(cfg.categories);
  std::vector<Category> categories;
  for (const auto& t : templates) categories.push_back({t.category_id, t.name});

  write_split(cfg.out_dir / "train", cfg, 0x747261696Eull /*'train'*/,
              cfg.n_train, templates, categories);
  write_split(cfg.out_dir / "val", cfg, 0x76616Cull /*'val'*/, cfg.n_val,
              templates, categories);

  if (cfg.n_pairs > 0) {
    const auto pair_dir = cfg.out_dir / "pairs";
    std::filesystem::create_directories(pair_dir / "images");
    SceneSpec spec;
    spec.canvas_w = cfg.canvas;
    spec.canvas_h = cfg.canvas;
    spec.categories = cfg.categories;
    spec.seed = cfg.seed;
    auto scene_pairs = make_invariance_pairs(spec, cfg.n_pairs, templates);

    std::vector<SceneRecord> records;
    std::vector<PairRecord> pair_records;
    int next_ann_id = 1;
    int next_image_id = 1;
    auto emit = [&](const Scene& scene, int pair_idx,
                    const char* side) -> std::pair<int, int> {
      SceneRecord rec;
      rec.image_id = next_image_id++;
      char name[48];
      std::snprintf(name, sizeof(name), "pair_%04d_%s.png", pair_idx, side);
      rec.file_name = name;
      rec.width = spec.canvas_w;
      rec.height = spec.canvas_h;
      int target_ann_id = -1;
      for (size_t k = 0; k < scene.annotations.size(); ++k) {
        const auto& ann = scene.annotations[k];
        DatasetInstance inst;
        inst.id = next_ann_id++;
        if (k == 0) target_ann_id = inst.id;  // target placed first
        inst.category_id = ann.category_id;
        inst.box = ann.box;
        inst.amodal_seg = rle_encode(ann.amodal_mask);
        inst.visible_seg = rle_encode(ann.visible_mask);
        inst.occlusion_rate = ann.occlusion_rate;
        rec.instances.push_back(std::move(inst));
      }
      write_png(pair_dir / "images" / rec.file_name, scene.image);
      const int image_id = rec.image_id;
      records.push_back(std::move(rec));
      return {image_id, target_ann_id};
    };
    for (size_t p = 0; p < scene_pairs.size(); ++p) {
      const auto [ida, anna] = emit(scene_pairs[p].a, static_cast<int>(p), "a");
      const auto [idb, annb] = emit(scene_pairs[p].b, static_cast<int>(p), "b");
      pair_records.push_back({ida, idb, anna, annb});
    }
    write_dataset_json(pair_dir / "annotations.json", records, categories,
                       cfg.seed);
    write_pairs_json(pair_dir / "pairs.json", pair_records);
  }
}

}  // namespace amodal
