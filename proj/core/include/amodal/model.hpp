// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <filesystem>
#include <memory>

#include "amodal/amodal_refine.hpp"
#include "amodal/backbone.hpp"
#include "amodal/heads.hpp"
#include "amodal/visible_refine.hpp"

namespace amodal {

struct ModelConfig {
  BackboneConfig backbone;
  int categories = 3;
  int head_width = 64;
  int class_hidden = 64;
  int prior_k = 16;  // prior channels into the amodal head; 0 disables
  bool reclass = true;
  uint64_t init_seed = 0;

  int mask_size() const { return backbone.roi_size * 2; }
  int roi_dim() const {
    return backbone.channels * backbone.roi_size * backbone.roi_size;
  }
};

/// The full trainable model: backbone, the two mask heads (shared between
/// coarse and refined passes), class/box head and the optional
/// reclassification head.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }

  const Backbone& backbone() const { return *backbone_; }
  const MaskHead& f_a() const { return f_a_; }
  const MaskHead& f_v() const { return f_v_; }
  const ClassBoxHead& class_box() const { return class_box_; }
  const ReclassHead& reclass() const { return reclass_; }
  bool has_reclass() const { return cfg_.reclass; }

  /// Coarse pass for one ROI: class/box outputs plus both coarse masks.
  /// The amodal head sees the feature zero-padded with the prior channels
  /// so one head serves the coarse and the refined pass.
  HeadOutputs coarse_forward(const nn::Var& roi_feature) const;

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<Model> load(const std::filesystem::path& path);

 private:
  ModelConfig cfg_;
  ParamRegistry params_;
  std::unique_ptr<Backbone> backbone_;
  MaskHead f_a_;
  MaskHead f_v_;
  ClassBoxHead class_box_;
  ReclassHead reclass_;
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);

}  // namespace amodal
