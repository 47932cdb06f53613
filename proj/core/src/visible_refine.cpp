// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/visible_refine.hpp"

#include <cmath>

#include "amodal/errors.hpp"

namespace amodal {

ReclassHead::ReclassHead(const std::string& prefix, int in_dim, int hidden,
                         int n_categories, ParamRegistry& params,
                         std::mt19937_64& rng)
    : n_categories_(n_categories) {
  fc1_w_ = params.create(prefix + ".fc1.w", {hidden, in_dim, 1},
                         std::sqrt(2.0 / in_dim), rng);
  fc1_b_ = params.create(prefix + ".fc1.b", {hidden, 1, 1}, 0.0, rng);
  fc2_w_ = params.create(prefix + ".fc2.w", {n_categories, hidden, 1},
                         std::sqrt(2.0 / hidden), rng);
  fc2_b_ = params.create(prefix + ".fc2.b", {n_categories, 1, 1}, 0.0, rng);
}

nn::Var ReclassHead::forward(const nn::Var& masked_feature) const {
  nn::Var h = nn::relu(nn::linear(masked_feature, fc1_w_, fc1_b_));
  return nn::linear(h, fc2_w_, fc2_b_);
}

nn::Var apply_mask_attention(const nn::Var& feature, const nn::Var& mask) {
  if (mask.dims()[0] != 1) {
    throw ShapeError("apply_mask_attention: mask must be single channel");
  }
  nn::Var resized =
      nn::bilinear_resize(mask, feature.dims()[1], feature.dims()[2]);
  return nn::mul_mask(feature, resized);
}

MaskHeadActivations refine_visible(const MaskHead& f_v, const nn::Var& feature,
                                   const nn::Var& coarse_amodal_prob) {
  return f_v.forward(apply_mask_attention(feature, coarse_amodal_prob));
}

nn::Var reclassify(const ReclassHead& f_rc, const nn::Var& feature,
                   const nn::Var& refined_visible_prob) {
  return f_rc.forward(apply_mask_attention(feature, refined_visible_prob));
}

nn::Var feature_matching_loss(
    const std::vector<MaskHeadActivations>& plain,
    const std::vector<MaskHeadActivations>& attended,
    const FeatureMatchConfig& fm,
    const std::vector<double>* instance_weights) {
  if (plain.size() != attended.size()) {
    throw ShapeError("feature_matching_loss: batch size mismatch");
  }
  const size_t n = plain.size();
  const int s = MaskHead::kLayers;
  std::vector<nn::Var> terms;
  std::vector<double> weights;
  for (size_t i = 0; i < n; ++i) {
    const double wi = instance_weights ? (*instance_weights)[i] : 1.0;
    for (int j = 0; j < s; ++j) {
      if (fm.lambda[j] == 0.0) continue;
      terms.push_back(nn::cosine_gap(plain[i].layers[j],
                                     attended[i].layers[j]));
      weights.push_back(fm.lambda[j] * wi / (static_cast<double>(n) * s));
    }
  }
  if (terms.empty()) {
    return nn::Var::leaf(Tensor(1, 1, 1));
  }
  return nn::weighted_sum(terms, weights);
}

nn::Var visible_feature_matching(const MaskHead& f_v,
                                 const std::vector<nn::Var>& features,
                                 const std::vector<nn::Var>& coarse_amodal,
                                 const FeatureMatchConfig& fm) {
  if (features.size() != coarse_amodal.size()) {
    throw ShapeError("visible_feature_matching: batch size mismatch");
  }
  std::vector<MaskHeadActivations> plain, attended;
  for (size_t i = 0; i < features.size(); ++i) {
    plain.push_back(f_v.forward(features[i]));
    attended.push_back(refine_visible(f_v, features[i], coarse_amodal[i]));
  }
  return feature_matching_loss(plain, attended, fm);
}

}  // namespace amodal
