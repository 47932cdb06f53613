// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <vector>

#include "amodal/errors.hpp"

namespace amodal {

/// Axis-aligned box in image pixel coordinates, corners (x_min, y_min) and
/// (x_max, y_max) with x_min < x_max and y_min < y_max for a valid box.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min < x_max && y_min < y_max; }

  /// Clip to [0, w] x [0, h]. May produce an empty (invalid) box.
  BoundingBox clipped(int image_w, int image_h) const;
};

double box_iou(const BoundingBox& a, const BoundingBox& b);

/// Dense H x W mask, row-major. Ground-truth masks hold {0,1}; predicted
/// masks hold probabilities in [0,1]. Masks of different resolutions never
/// compare equal.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width, double fill = 0.0);

  int height() const { return h_; }
  int width() const { return w_; }
  int size() const { return h_ * w_; }

  double& at(int y, int x) { return data_[y * w_ + x]; }
  double at(int y, int x) const { return data_[y * w_ + x]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_resolution(const Mask& other) const {
    return h_ == other.h_ && w_ == other.w_;
  }

  bool operator==(const Mask& other) const {
    return same_resolution(other) && data_ == other.data_;
  }

 private:
  int h_ = 0;
  int w_ = 0;
  std::vector<double> data_;
};

/// Sum of all cell values.
double mask_area(const Mask& m);

/// 1 - area(visible)/area(amodal), clamped to [0,1]. Throws
/// InvalidAnnotationError when the amodal mask has zero area.
double occlusion_rate(const Mask& visible, const Mask& amodal);

/// Intersection-over-union after binarizing both masks at 0.5. Empty/empty
/// is defined as 1.0. Throws ShapeError on resolution mismatch.
double mask_iou(const Mask& a, const Mask& b);

/// Bilinear resampling with corner alignment: output corner cells sample the
/// input corner cells exactly, so resizing to the same resolution is the
/// identity and constants are preserved.
Mask resize_mask(const Mask& m, int out_h, int out_w);

Mask binarize(const Mask& m, double threshold = 0.5);

/// Tight bounding box of cells >= threshold. Empty mask yields an invalid
/// (zero-area) box.
BoundingBox tight_box(const Mask& m, double threshold = 0.5);

/// Sample the region of `m` under `box` onto an out_h x out_w grid
/// (pixel-center bilinear sampling, edges clamped). Used to pool full-canvas
/// ground truth down to mask-head resolution.
Mask crop_resize(const Mask& m, const BoundingBox& box, int out_h, int out_w);

/// Inverse of crop_resize: spread `patch` over `box` on a canvas_h x canvas_w
/// grid; cells outside the box stay 0.
Mask paste_mask(const Mask& patch, const BoundingBox& box, int canvas_h,
                int canvas_w);

}  // namespace amodal
