// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/mask.hpp"

#include <algorithm>
#include <cmath>

namespace amodal {

BoundingBox BoundingBox::clipped(int image_w, int image_h) const {
  BoundingBox out;
  out.x_min = std::clamp(x_min, 0.0, static_cast<double>(image_w));
  out.y_min = std::clamp(y_min, 0.0, static_cast<double>(image_h));
  out.x_max = std::clamp(x_max, 0.0, static_cast<double>(image_w));
  out.y_max = std::clamp(y_max, 0.0, static_cast<double>(image_h));
  return out;
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(
      0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(
      0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Mask::Mask(int height, int width, double fill)
    : h_(height), w_(width), data_(static_cast<size_t>(height) * width, fill) {}

double mask_area(const Mask& m) {
  double sum = 0.0;
  for (double v : m.data()) sum += v;
  return sum;
}

double occlusion_rate(const Mask& visible, const Mask& amodal) {
  const double amodal_area = mask_area(amodal);
  if (amodal_area <= 0.0) {
    throw InvalidAnnotationError("occlusion_rate: amodal mask has zero area");
  }
  const double rate = 1.0 - mask_area(visible) / amodal_area;
  return std::clamp(rate, 0.0, 1.0);
}

double mask_iou(const Mask& a, const Mask& b) {
  if (!a.same_resolution(b)) {
    throw ShapeError("mask_iou: resolution mismatch");
  }
  long inter = 0;
  long uni = 0;
  for (int i = 0; i < a.size(); ++i) {
    const bool pa = a.data()[i] >= 0.5;
    const bool pb = b.data()[i] >= 0.5;
    inter += pa && pb;
    uni += pa || pb;
  }
  if (uni == 0) return 1.0;  // both empty
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Corner-aligned source coordinate for output index i.
inline double corner_coord(int i, int out_n, int in_n) {
  if (out_n <= 1 || in_n <= 1) return 0.5 * (in_n - 1);
  return static_cast<double>(i) * (in_n - 1) / (out_n - 1);
}

inline double sample_bilinear(const Mask& m, double y, double x) {
  const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, m.height() - 1);
  const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, m.width() - 1);
  const int y1 = std::min(y0 + 1, m.height() - 1);
  const int x1 = std::min(x0 + 1, m.width() - 1);
  const double fy = std::clamp(y - y0, 0.0, 1.0);
  const double fx = std::clamp(x - x0, 0.0, 1.0);
  return m.at(y0, x0) * (1 - fy) * (1 - fx) + m.at(y0, x1) * (1 - fy) * fx +
         m.at(y1, x0) * fy * (1 - fx) + m.at(y1, x1) * fy * fx;
}

}  // namespace

Mask resize_mask(const Mask& m, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("resize_mask: target dims must be >= 1");
  }
  if (out_h == m.height() && out_w == m.width()) return m;
  Mask out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    const double sy = corner_coord(y, out_h, m.height());
    for (int x = 0; x < out_w; ++x) {
      const double sx = corner_coord(x, out_w, m.width());
      out.at(y, x) = sample_bilinear(m, sy, sx);
    }
  }
  return out;
}

Mask binarize(const Mask& m, double threshold) {
  Mask out(m.height(), m.width());
  for (int i = 0; i < m.size(); ++i) {
    out.data()[i] = m.data()[i] >= threshold ? 1.0 : 0.0;
  }
  return out;
}

BoundingBox tight_box(const Mask& m, double threshold) {
  int x_lo = m.width(), x_hi = -1, y_lo = m.height(), y_hi = -1;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m.at(y, x) >= threshold) {
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
    }
  }
  if (x_hi < 0) return BoundingBox{};  // empty
  return BoundingBox{static_cast<double>(x_lo), static_cast<double>(y_lo),
                     static_cast<double>(x_hi + 1),
                     static_cast<double>(y_hi + 1)};
}

Mask crop_resize(const Mask& m, const BoundingBox& box, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("crop_resize: target dims must be >= 1");
  }
  Mask out(out_h, out_w);
  const double bh = box.height();
  const double bw = box.width();
  for (int y = 0; y < out_h; ++y) {
    // Pixel-center sampling: source pixel (r,c) has center (r+0.5, c+0.5).
    const double sy = box.y_min + (y + 0.5) * bh / out_h - 0.5;
    for (int x = 0; x < out_w; ++x) {
      const double sx = box.x_min + (x + 0.5) * bw / out_w - 0.5;
      out.at(y, x) = sample_bilinear(m, sy, sx);
    }
  }
  return out;
}

Mask paste_mask(const Mask& patch, const BoundingBox& box, int canvas_h,
                int canvas_w) {
  Mask out(canvas_h, canvas_w);
  const double bh = box.height();
  const double bw = box.width();
  if (bh <= 0.0 || bw <= 0.0) return out;
  const int y_begin = std::max(0, static_cast<int>(std::floor(box.y_min)));
  const int y_end = std::min(canvas_h, static_cast<int>(std::ceil(box.y_max)));
  const int x_begin = std::max(0, static_cast<int>(std::floor(box.x_min)));
  const int x_end = std::min(canvas_w, static_cast<int>(std::ceil(box.x_max)));
  for (int y = y_begin; y < y_end; ++y) {
    const double py = (y + 0.5 - box.y_min) / bh * patch.height() - 0.5;
    for (int x = x_begin; x < x_end; ++x) {
      const double px = (x + 0.5 - box.x_min) / bw * patch.width() - 0.5;
      out.at(y, x) = sample_bilinear(patch, py, px);
    }
  }
  return out;
}

}  // namespace amodal
