// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "amodal/errors.hpp"
#include "amodal/mask.hpp"

namespace amodal {

/// Dense row-major (channels, height, width) value block. Vectors and
/// matrices use (n,1,1) and (rows,cols,1).
struct Tensor {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : dims{c, h, w},
        data(static_cast<size_t>(c) * h * w, fill) {}

  int channels() const { return dims[0]; }
  int height() const { return dims[1]; }
  int width() const { return dims[2]; }
  int size() const { return dims[0] * dims[1] * dims[2]; }

  double& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * dims[1] + y) * dims[2] + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * dims[1] + y) * dims[2] + x];
  }

  /// One channel as a Mask (copy).
  Mask channel_as_mask(int c) const;
  static Tensor from_mask(const Mask& m);
};

namespace nn {

/// Node of the computation tape. Values are computed eagerly; when gradients
/// are enabled and any input requires them, a backward closure is attached.
struct Node {
  Tensor value;
  std::vector<double> grad;  // allocated lazily, same element count as value
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward;
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value.data.size()) {
      grad.assign(value.data.size(), 0.0);
    }
  }
};

/// Cheap handle to a Node. Copying shares the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Var leaf(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  const std::array<int, 3>& dims() const { return node_->value.dims; }
  int size() const { return node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  std::vector<double>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() {
    if (node_) node_->grad.assign(node_->value.data.size(), 0.0);
  }

  double scalar() const { return node_->value.data[0]; }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Thread-local gradient mode. Inference paths wrap forward passes in a
/// NoGradGuard so no backward closures are built.
bool grad_enabled();
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

// ---- elementwise & structural ops ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double k);
Var relu(const Var& a);
Var sigmoid(const Var& a);

/// Multiply every channel of `f` elementwise by the single-channel mask `m`
/// (the attention product).
Var mul_mask(const Var& f, const Var& m);

Var concat_channels(const Var& a, const Var& b);
/// Append `extra` all-zero channels.
Var pad_channels(const Var& a, int extra);
/// Flat slice [offset, offset+len) viewed as a (len,1,1) vector.
Var slice(const Var& a, int offset, int len);
Var reshape(const Var& a, int c, int h, int w);

// ---- layers ----
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
/// Transposed convolution, kernel 2, stride 2 (exact 2x upsampling).
/// Weight layout (C_in, C_out, 2, 2) flattened into (C_in, C_out*4, 1).
Var deconv2x2(const Var& x, const Var& w, const Var& b);
/// Fully connected layer over the flattened input; w is (out,in,1).
Var linear(const Var& x, const Var& w, const Var& b);
/// Corner-aligned bilinear resize of every channel (matches resize_mask).
Var bilinear_resize(const Var& x, int out_h, int out_w);
/// Sample an out_h x out_w grid of bilinear points inside `box` (scaled by
/// `spatial_scale` into feature-map coordinates) from every channel.
Var roi_align(const Var& fmap, const BoundingBox& box, int out_h, int out_w,
              double spatial_scale);

// ---- losses (scalar outputs) ----
Var bce_with_logits_mean(const Var& logits, const Tensor& target);
Var softmax_cross_entropy(const Var& logits, int label);
/// Smooth-L1 (beta = 1) summed over elements.
Var smooth_l1_sum(const Var& pred, const Tensor& target);
/// 1 - cosine similarity of the flattened inputs; defined as 0 when either
/// input has zero norm.
Var cosine_gap(const Var& a, const Var& b);
Var weighted_sum(const std::vector<Var>& terms,
                 const std::vector<double>& weights);

/// Reverse-mode sweep from a scalar loss. Accumulates into .grad of every
/// node that requires gradients.
void backward(const Var& loss);

/// Softmax of a logits vector (value-level helper, no graph).
std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace nn
}  // namespace amodal
