// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/heads.hpp"

#include <cmath>

#include "amodal/errors.hpp"

namespace amodal {

MaskHead::MaskHead(const std::string& prefix, int in_channels, int width,
                   ParamRegistry& params, std::mt19937_64& rng)
    : in_channels_(in_channels) {
  int cin = in_channels;
  for (int i = 0; i < 4; ++i) {
    const double std = std::sqrt(2.0 / (cin * 9));
    const std::string name = prefix + ".conv" + std::to_string(i + 1);
    conv_w_[i] = params.create(name + ".w", {width, cin * 9, 1}, std, rng);
    conv_b_[i] = params.create(name + ".b", {width, 1, 1}, 0.0, rng);
    cin = width;
  }
  const double std = std::sqrt(2.0 / (width * 4));
  deconv_w_ = params.create(prefix + ".deconv.w", {width, 1 * 4, 1}, std, rng);
  deconv_b_ = params.create(prefix + ".deconv.b", {1, 1, 1}, 0.0, rng);
}

MaskHeadActivations MaskHead::forward(const nn::Var& x) const {
  if (x.dims()[0] != in_channels_) {
    throw ShapeError("MaskHead: expected " + std::to_string(in_channels_) +
                     " input channels, got " + std::to_string(x.dims()[0]));
  }
  MaskHeadActivations acts;
  nn::Var h = x;
  for (int i = 0; i < 4; ++i) {
    h = nn::relu(nn::conv2d(h, conv_w_[i], conv_b_[i], 1, 1));
    acts.layers[i] = h;
  }
  acts.layers[4] = nn::deconv2x2(h, deconv_w_, deconv_b_);
  acts.probs = nn::sigmoid(acts.layers[4]);
  return acts;
}

ClassBoxHead::ClassBoxHead(const std::string& prefix, int in_dim, int hidden,
                           int n_categories, ParamRegistry& params,
                           std::mt19937_64& rng)
    : n_categories_(n_categories) {
  fc1_w_ = params.create(prefix + ".fc1.w", {hidden, in_dim, 1},
                         std::sqrt(2.0 / in_dim), rng);
  fc1_b_ = params.create(prefix + ".fc1.b", {hidden, 1, 1}, 0.0, rng);
  cls_w_ = params.create(prefix + ".cls.w", {n_categories + 1, hidden, 1},
                         std::sqrt(2.0 / hidden), rng);
  cls_b_ = params.create(prefix + ".cls.b", {n_categories + 1, 1, 1}, 0.0, rng);
  box_w_ = params.create(prefix + ".box.w", {4 * n_categories, hidden, 1},
                         std::sqrt(2.0 / hidden), rng);
  box_b_ = params.create(prefix + ".box.b", {4 * n_categories, 1, 1}, 0.0, rng);
}

ClassBoxHead::Out ClassBoxHead::forward(const nn::Var& roi_feature) const {
  nn::Var h = nn::relu(nn::linear(roi_feature, fc1_w_, fc1_b_));
  return Out{nn::linear(h, cls_w_, cls_b_), nn::linear(h, box_w_, box_b_)};
}

RoiTargets make_roi_targets(const InstanceAnnotation& ann,
                            const BoundingBox& roi_box, int mask_size) {
  RoiTargets t;
  t.category_id = ann.category_id;
  t.amodal = binarize(crop_resize(ann.amodal_mask, roi_box, mask_size,
                                  mask_size));
  t.visible = binarize(crop_resize(ann.visible_mask, roi_box, mask_size,
                                   mask_size));
  t.box_deltas = encode_box_deltas(roi_box, ann.box);
  return t;
}

std::array<double, 4> encode_box_deltas(const BoundingBox& proposal,
                                        const BoundingBox& gt) {
  const double pw = proposal.width();
  const double ph = proposal.height();
  const double px = proposal.x_min + 0.5 * pw;
  const double py = proposal.y_min + 0.5 * ph;
  const double gw = gt.width();
  const double gh = gt.height();
  const double gx = gt.x_min + 0.5 * gw;
  const double gy = gt.y_min + 0.5 * gh;
  return {(gx - px) / pw, (gy - py) / ph, std::log(gw / pw),
          std::log(gh / ph)};
}

BoundingBox decode_box_deltas(const BoundingBox& proposal,
                              const std::array<double, 4>& d) {
  const double pw = proposal.width();
  const double ph = proposal.height();
  const double px = proposal.x_min + 0.5 * pw;
  const double py = proposal.y_min + 0.5 * ph;
  const double cx = px + d[0] * pw;
  const double cy = py + d[1] * ph;
  const double w = pw * std::exp(std::clamp(d[2], -4.0, 4.0));
  const double h = ph * std::exp(std::clamp(d[3], -4.0, 4.0));
  return BoundingBox{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

CoarseLossVars coarse_losses(const HeadOutputs& outputs,
                             const RoiTargets& targets) {
  if (targets.category_id <= 0) {
    throw InvalidAnnotationError("coarse_losses: background ROI");
  }
  CoarseLossVars out;
  out.amodal_bce = nn::bce_with_logits_mean(outputs.amodal.logits(),
                                            Tensor::from_mask(targets.amodal));
  out.visible_bce = nn::bce_with_logits_mean(
      outputs.visible.logits(), Tensor::from_mask(targets.visible));
  out.cls_ce =
      nn::softmax_cross_entropy(outputs.class_logits, targets.category_id);
  // Per-class box regression: slice out the true class' 4 deltas.
  const int offset = 4 * (targets.category_id - 1);
  Tensor target(4, 1, 1);
  for (int i = 0; i < 4; ++i) target.data[i] = targets.box_deltas[i];
  out.box_reg =
      nn::smooth_l1_sum(nn::slice(outputs.box_deltas, offset, 4), target);
  return out;
}

}  // namespace amodal
