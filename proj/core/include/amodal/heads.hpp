// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "amodal/backbone.hpp"
#include "amodal/types.hpp"

namespace amodal {

/// Per-layer outputs of one mask-head pass. layers[0..3] are the post-ReLU
/// conv activations, layers[4] the deconv mask logits (2x spatial size).
struct MaskHeadActivations {
  std::array<nn::Var, 5> layers;
  nn::Var probs;  // sigmoid of layers[4]

  const nn::Var& logits() const { return layers[4]; }
  Mask prob_mask() const { return probs.value().channel_as_mask(0); }
};

/// 4 conv layers + 1 deconv layer; the deconv doubles the spatial size and
/// emits a single-channel mask.
class MaskHead {
 public:
  MaskHead() = default;
  MaskHead(const std::string& prefix, int in_channels, int width,
           ParamRegistry& params, std::mt19937_64& rng);

  MaskHeadActivations forward(const nn::Var& x) const;
  int in_channels() const { return in_channels_; }
  static constexpr int kLayers = 5;

 private:
  int in_channels_ = 0;
  std::array<nn::Var, 4> conv_w_;
  std::array<nn::Var, 4> conv_b_;
  nn::Var deconv_w_;
  nn::Var deconv_b_;
};

/// Class + box head over the flattened ROI feature. Class logits cover the
/// background (index 0) plus every category; box deltas are per category.
class ClassBoxHead {
 public:
  ClassBoxHead() = default;
  ClassBoxHead(const std::string& prefix, int in_dim, int hidden,
               int n_categories, ParamRegistry& params, std::mt19937_64& rng);

  struct Out {
    nn::Var class_logits;  // (n_categories + 1, 1, 1)
    nn::Var box_deltas;    // (4 * n_categories, 1, 1)
  };
  Out forward(const nn::Var& roi_feature) const;
  int n_categories() const { return n_categories_; }

 private:
  int n_categories_ = 0;
  nn::Var fc1_w_, fc1_b_, cls_w_, cls_b_, box_w_, box_b_;
};

/// Outputs of the coarse pass for one ROI.
struct HeadOutputs {
  nn::Var class_logits;
  nn::Var box_deltas;
  MaskHeadActivations amodal;   // M_a^c pass (feature zero-padded to C+k)
  MaskHeadActivations visible;  // M_v^c pass

  Mask coarse_amodal() const { return amodal.prob_mask(); }
  Mask coarse_visible() const { return visible.prob_mask(); }
};

/// Ground truth pooled to head resolution for one ROI. category_id 0 marks
/// a background ROI (only the classification loss applies).
struct RoiTargets {
  int category_id = 0;
  Mask amodal;   // mask_size x mask_size
  Mask visible;  // mask_size x mask_size
  std::array<double, 4> box_deltas{0, 0, 0, 0};
};

RoiTargets make_roi_targets(const InstanceAnnotation& ann,
                            const BoundingBox& roi_box, int mask_size);

/// Standard (dx, dy, dw, dh) box regression encoding.
std::array<double, 4> encode_box_deltas(const BoundingBox& proposal,
                                        const BoundingBox& gt);
BoundingBox decode_box_deltas(const BoundingBox& proposal,
                              const std::array<double, 4>& deltas);

struct CoarseLossVars {
  nn::Var amodal_bce;
  nn::Var visible_bce;
  nn::Var cls_ce;
  nn::Var box_reg;
};

/// The four coarse losses for one foreground ROI: two per-pixel BCE mask
/// losses plus the Mask R-CNN style class CE and smooth-L1 box regression
/// (regression on the true class' delta slice).
CoarseLossVars coarse_losses(const HeadOutputs& outputs,
                             const RoiTargets& targets);

}  // namespace amodal
