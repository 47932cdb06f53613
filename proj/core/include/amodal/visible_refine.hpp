// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <vector>

#include "amodal/heads.hpp"

namespace amodal {

/// Per-layer feature-matching weights. Only the last conv layer and the
/// deconv layer contribute by default.
struct FeatureMatchConfig {
  std::array<double, MaskHead::kLayers> lambda{0.0, 0.0, 0.0, 0.01, 0.05};
  double lambda_rc = 0.25;
};

/// Two fully connected layers mapping the flattened visible-masked ROI
/// feature to category logits (no background class).
class ReclassHead {
 public:
  ReclassHead() = default;
  ReclassHead(const std::string& prefix, int in_dim, int hidden,
              int n_categories, ParamRegistry& params, std::mt19937_64& rng);

  nn::Var forward(const nn::Var& masked_feature) const;
  int n_categories() const { return n_categories_; }

 private:
  int n_categories_ = 0;
  nn::Var fc1_w_, fc1_b_, fc2_w_, fc2_b_;
};

/// Resize the mask to the feature's spatial size and multiply it into every
/// channel.
nn::Var apply_mask_attention(const nn::Var& feature, const nn::Var& mask);

/// Refined visible pass: the coarse visible head re-run on the
/// amodal-attention feature. Same head object, hence the same parameters.
MaskHeadActivations refine_visible(const MaskHead& f_v, const nn::Var& feature,
                                   const nn::Var& coarse_amodal_prob);

/// Reclassification logits over the refined-visible-masked feature.
nn::Var reclassify(const ReclassHead& f_rc, const nn::Var& feature,
                   const nn::Var& refined_visible_prob);

/// 1/(N*S) sum over instances and layers of lambda_j * (1 - cos) between the
/// plain-pass and attention-pass activations. `instance_weights` (optional)
/// scales each instance's contribution.
nn::Var feature_matching_loss(
    const std::vector<MaskHeadActivations>& plain,
    const std::vector<MaskHeadActivations>& attended,
    const FeatureMatchConfig& fm,
    const std::vector<double>* instance_weights = nullptr);

/// Convenience form running both visible passes internally (single batch).
nn::Var visible_feature_matching(const MaskHead& f_v,
                                 const std::vector<nn::Var>& features,
                                 const std::vector<nn::Var>& coarse_amodal,
                                 const FeatureMatchConfig& fm);

}  // namespace amodal
