// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "amodal/dataset.hpp"
#include "amodal/image.hpp"
#include "amodal/types.hpp"

namespace amodal {

/// Parametric silhouette family used as one synthetic category. Shapes are
/// rendered analytically (point-in-shape test per pixel center), so the same
/// transform always produces the same mask.
struct ShapeTemplate {
  enum class Kind { Ellipse, Star, Capsule, RoundedRect, LShape };

  int category_id = 0;
  std::string name;
  Kind kind = Kind::Ellipse;
  double min_scale = 14.0;  // base radius in pixels
  double max_scale = 26.0;
};

/// The first `categories` templates (>= 3 distinct silhouettes supported).
std::vector<ShapeTemplate> default_templates(int categories);

struct SceneSpec {
  int canvas_w = 96;
  int canvas_h = 96;
  int min_instances = 2;
  int max_instances = 4;
  uint64_t seed = 0;
  int categories = 3;
  double drop_occlusion = 0.95;  // instances hidden beyond this are dropped
  double noise_amplitude = 18.0;
};

/// Render the full (amodal) silhouette of a template on the canvas.
/// Throws PlacementError when the transform leaves nothing on the canvas.
Mask render_template(const ShapeTemplate& t, double scale, double rotation,
                     double center_x, double center_y, int canvas_h,
                     int canvas_w);

struct Scene {
  Image image;
  std::vector<InstanceAnnotation> annotations;
};

/// Stack randomly posed instances back-to-front; visible masks are the
/// amodal masks minus everything stacked above, and the image shows only
/// visible regions. Output is fully determined by the spec (seed included).
Scene composite_scene(const SceneSpec& spec,
                      const std::vector<ShapeTemplate>& templates);

/// Two scenes identical in target instance, layout and visible region; only
/// the occluder's category (fill appearance) differs.
struct ScenePair {
  Scene a;
  Scene b;
  int target_index_a = 0;
  int target_index_b = 0;
};

std::vector<ScenePair> make_invariance_pairs(
    const SceneSpec& spec, int n_pairs,
    const std::vector<ShapeTemplate>& templates);

struct GenerateConfig {
  std::filesystem::path out_dir;
  int n_train = 500;
  int n_val = 100;
  int n_pairs = 0;
  uint64_t seed = 1;
  int categories = 3;
  int canvas = 96;
  int min_instances = 2;
  int max_instances = 4;
};

/// Write train/val (and optional pairs) splits: images/*.png plus the
/// extended COCO-style annotations.json per split.
void generate_dataset(const GenerateConfig& cfg);

/// Stable per-scene stream so parallel and serial generation agree.
uint64_t derive_seed(uint64_t seed, uint64_t salt, uint64_t index);

}  // namespace amodal
