// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <map>
#include <string>

#include "amodal/autograd.hpp"
#include "amodal/mask.hpp"

namespace amodal {

/// One ground-truth instance: category, amodal box, both masks and the
/// occlusion rate (1 - visible area / amodal area).
struct InstanceAnnotation {
  int category_id = 0;
  BoundingBox box;
  Mask amodal_mask;
  Mask visible_mask;
  double occlusion_rate = 0.0;

  /// Throws InvalidAnnotationError when visible exceeds amodal, the amodal
  /// mask is empty, or the stored rate disagrees with the masks.
  void validate(double tol = 1e-6) const;
};

/// ROI feature block (C x h x w) extracted for one box. The feature may be
/// part of a live computation graph during training.
struct RoiFeature {
  nn::Var feature;
  BoundingBox source_box;

  int channels() const { return feature.dims()[0]; }
  int height() const { return feature.dims()[1]; }
  int width() const { return feature.dims()[2]; }
};

struct Detection {
  BoundingBox box;
  int category_id = 0;
  double class_score = 0.0;
  Mask amodal_mask;
  Mask visible_mask;
};

/// Named scalar per loss term plus the total.
struct LossReport {
  std::map<std::string, double> terms;
  double total = 0.0;
};

struct Category {
  int id = 0;
  std::string name;
};

}  // namespace amodal
