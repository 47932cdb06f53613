// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/backbone.hpp"

#include <cmath>
#include <iostream>

#include "amodal/errors.hpp"

namespace amodal {

nn::Var ParamRegistry::create(const std::string& name,
                              std::array<int, 3> dims, double init_std,
                              std::mt19937_64& rng) {
  for (const auto& [existing, _] : params_) {
    if (existing == name) {
      throw ConfigError("ParamRegistry: duplicate parameter " + name);
    }
  }
  Tensor t(dims[0], dims[1], dims[2]);
  if (init_std > 0.0) {
    std::normal_distribution<double> dist(0.0, init_std);
    for (double& v : t.data) v = dist(rng);
  }
  nn::Var var = nn::Var::leaf(std::move(t), /*requires_grad=*/true);
  params_.emplace_back(name, var);
  return var;
}

nn::Var ParamRegistry::find(const std::string& name) const {
  for (const auto& [n, v] : params_) {
    if (n == name) return v;
  }
  throw ConfigError("ParamRegistry: unknown parameter " + name);
}

void ParamRegistry::zero_grad() {
  for (auto& [_, v] : params_) v.zero_grad();
}

void BackboneConfig::validate() const {
  if (channels < 8) throw ConfigError("BackboneConfig: channels must be >= 8");
  for (int w : stage_widths) {
    if (w <= 0) throw ConfigError("BackboneConfig: widths must be positive");
  }
  if (stage_widths[2] != channels) {
    throw ConfigError(
        "BackboneConfig: last stage width must equal ROI channels");
  }
  if (roi_size < 2) throw ConfigError("BackboneConfig: roi_size too small");
}

Backbone::Backbone(const BackboneConfig& cfg, ParamRegistry& params,
                   std::mt19937_64& rng)
    : cfg_(cfg) {
  cfg_.validate();
  int cin = 3;
  for (int s = 0; s < 3; ++s) {
    const int cout = cfg_.stage_widths[s];
    const double std = std::sqrt(2.0 / (cin * 9));
    const std::string prefix = "backbone.stage" + std::to_string(s);
    w_[s] = params.create(prefix + ".w", {cout, cin * 9, 1}, std, rng);
    b_[s] = params.create(prefix + ".b", {cout, 1, 1}, 0.0, rng);
    cin = cout;
  }
}

nn::Var Backbone::forward(const Tensor& image) const {
  nn::Var x = nn::Var::leaf(image);
  for (int s = 0; s < 3; ++s) {
    x = nn::relu(nn::conv2d(x, w_[s], b_[s], /*stride=*/2, /*pad=*/1));
  }
  return x;
}

std::vector<RoiFeature> extract_roi_features(
    const nn::Var& feature_map, const std::vector<BoundingBox>& boxes,
    int image_w, int image_h, int roi_size, int stride,
    std::vector<int>* kept) {
  std::vector<RoiFeature> out;
  for (size_t i = 0; i < boxes.size(); ++i) {
    const BoundingBox clipped = boxes[i].clipped(image_w, image_h);
    if (!clipped.valid() || clipped.area() < 1.0) {
      std::cerr << "extract_roi_features: skipping degenerate box #" << i
                << "\n";
      continue;
    }
    RoiFeature roi;
    roi.feature = nn::roi_align(feature_map, clipped, roi_size, roi_size,
                                1.0 / stride);
    roi.source_box = clipped;
    out.push_back(std::move(roi));
    if (kept) kept->push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace amodal
