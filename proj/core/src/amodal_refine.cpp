// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/amodal_refine.hpp"

#include "amodal/errors.hpp"

namespace amodal {

nn::Var stack_prior_channels(const std::vector<Mask>& priors, int h, int w) {
  Tensor t(static_cast<int>(priors.size()), h, w);
  for (size_t k = 0; k < priors.size(); ++k) {
    const Mask resized = resize_mask(priors[k], h, w);
    std::copy(resized.data().begin(), resized.data().end(),
              t.data.begin() + static_cast<size_t>(k) * h * w);
  }
  return nn::Var::leaf(std::move(t));
}

MaskHeadActivations refine_amodal(const MaskHead& f_a, const nn::Var& feature,
                                  const std::optional<nn::Var>& visible_prob,
                                  const std::vector<Mask>& priors) {
  const int expected_k = f_a.in_channels() - feature.dims()[0];
  if (static_cast<int>(priors.size()) != expected_k) {
    throw ShapeError("refine_amodal: expected " + std::to_string(expected_k) +
                     " shape priors, got " + std::to_string(priors.size()));
  }
  nn::Var base = visible_prob
                     ? apply_mask_attention(feature, *visible_prob)
                     : feature;
  if (priors.empty()) return f_a.forward(base);
  nn::Var prior_channels =
      stack_prior_channels(priors, feature.dims()[1], feature.dims()[2]);
  return f_a.forward(nn::concat_channels(base, prior_channels));
}

nn::Var amodal_feature_matching(const MaskHead& f_a,
                                const std::vector<nn::Var>& features,
                                const std::vector<nn::Var>& refined_visible,
                                const std::vector<std::vector<Mask>>& priors,
                                const FeatureMatchConfig& fm) {
  if (features.size() != refined_visible.size() ||
      features.size() != priors.size()) {
    throw ShapeError("amodal_feature_matching: batch size mismatch");
  }
  std::vector<MaskHeadActivations> plain, attended;
  for (size_t i = 0; i < features.size(); ++i) {
    const int k = f_a.in_channels() - features[i].dims()[0];
    plain.push_back(f_a.forward(nn::pad_channels(features[i], k)));
    attended.push_back(
        refine_amodal(f_a, features[i], refined_visible[i], priors[i]));
  }
  return feature_matching_loss(plain, attended, fm);
}

}  // namespace amodal
