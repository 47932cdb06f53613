// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <random>
#include <string>
#include <vector>

#include "amodal/autograd.hpp"
#include "amodal/types.hpp"

namespace amodal {

/// Named trainable leaves. Modules register their parameters here so the
/// optimizer and checkpointing see one flat list.
class ParamRegistry {
 public:
  nn::Var create(const std::string& name, std::array<int, 3> dims,
                 double init_std, std::mt19937_64& rng);
  nn::Var find(const std::string& name) const;
  const std::vector<std::pair<std::string, nn::Var>>& all() const {
    return params_;
  }
  void zero_grad();

 private:
  std::vector<std::pair<std::string, nn::Var>> params_;
};

struct BackboneConfig {
  std::array<int, 3> stage_widths{16, 32, 64};
  int channels = 64;  // ROI feature channels C; must equal stage_widths[2]
  int roi_size = 14;
  bool use_gt_boxes = true;

  void validate() const;
  int stride() const { return 8; }  // three stride-2 stages
};

/// Three stride-2 conv stages mapping an RGB image to a C-channel feature
/// map at 1/8 resolution.
class Backbone {
 public:
  Backbone(const BackboneConfig& cfg, ParamRegistry& params,
           std::mt19937_64& rng);

  nn::Var forward(const Tensor& image) const;
  const BackboneConfig& config() const { return cfg_; }

 private:
  BackboneConfig cfg_;
  std::array<nn::Var, 3> w_;
  std::array<nn::Var, 3> b_;
};

/// Bilinearly sample one roi_size x roi_size feature block per box.
/// Boxes are clipped to the image; boxes degenerating to less than one
/// pixel of area are skipped with a warning. `kept` (when non-null)
/// receives the indices of the surviving boxes.
std::vector<RoiFeature> extract_roi_features(
    const nn::Var& feature_map, const std::vector<BoundingBox>& boxes,
    int image_w, int image_h, int roi_size, int stride,
    std::vector<int>* kept = nullptr);

}  // namespace amodal
