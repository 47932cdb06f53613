// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/model.hpp"

#include <nlohmann/json.hpp>

#include "amodal/errors.hpp"
#include "amodal/serialize.hpp"

namespace amodal {

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  std::mt19937_64 rng(cfg.init_seed);
  backbone_ = std::make_unique<Backbone>(cfg.backbone, params_, rng);
  f_v_ = MaskHead("f_v", cfg.backbone.channels, cfg.head_width, params_, rng);
  f_a_ = MaskHead("f_a", cfg.backbone.channels + cfg.prior_k, cfg.head_width,
                  params_, rng);
  class_box_ = ClassBoxHead("class_box", cfg.roi_dim(), cfg.class_hidden,
                            cfg.categories, params_, rng);
  if (cfg.reclass) {
    reclass_ = ReclassHead("reclass", cfg.roi_dim(), cfg.class_hidden,
                           cfg.categories, params_, rng);
  }
}

HeadOutputs Model::coarse_forward(const nn::Var& roi_feature) const {
  HeadOutputs out;
  auto cb = class_box_.forward(roi_feature);
  out.class_logits = cb.class_logits;
  out.box_deltas = cb.box_deltas;
  out.amodal = f_a_.forward(nn::pad_channels(roi_feature, cfg_.prior_k));
  out.visible = f_v_.forward(roi_feature);
  return out;
}

std::string model_config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["kind"] = "amodalseg_model";
  j["categories"] = cfg.categories;
  j["head_width"] = cfg.head_width;
  j["class_hidden"] = cfg.class_hidden;
  j["prior_k"] = cfg.prior_k;
  j["reclass"] = cfg.reclass;
  j["init_seed"] = cfg.init_seed;
  j["backbone"] = {{"stage_widths", cfg.backbone.stage_widths},
                   {"channels", cfg.backbone.channels},
                   {"roi_size", cfg.backbone.roi_size},
                   {"use_gt_boxes", cfg.backbone.use_gt_boxes}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  if (j.value("kind", "") != "amodalseg_model") {
    throw IoError("model config: unexpected archive kind");
  }
  ModelConfig cfg;
  cfg.categories = j.at("categories").get<int>();
  cfg.head_width = j.at("head_width").get<int>();
  cfg.class_hidden = j.at("class_hidden").get<int>();
  cfg.prior_k = j.at("prior_k").get<int>();
  cfg.reclass = j.at("reclass").get<bool>();
  cfg.init_seed = j.at("init_seed").get<uint64_t>();
  const auto& b = j.at("backbone");
  const auto widths = b.at("stage_widths").get<std::vector<int>>();
  if (widths.size() != 3) throw IoError("model config: bad stage_widths");
  cfg.backbone.stage_widths = {widths[0], widths[1], widths[2]};
  cfg.backbone.channels = b.at("channels").get<int>();
  cfg.backbone.roi_size = b.at("roi_size").get<int>();
  cfg.backbone.use_gt_boxes = b.at("use_gt_boxes").get<bool>();
  return cfg;
}

void Model::save(const std::filesystem::path& path) const {
  std::vector<std::pair<std::string, const Tensor*>> arrays;
  for (const auto& [name, var] : params_.all()) {
    arrays.emplace_back(name, &var.value());
  }
  save_archive(path, model_config_to_json(cfg_), arrays);
}

std::unique_ptr<Model> Model::load(const std::filesystem::path& path) {
  Archive ar = load_archive(path);
  auto model = std::make_unique<Model>(model_config_from_json(ar.meta_json));
  for (const auto& [name, var] : model->params_.all()) {
    auto it = ar.arrays.find(name);
    if (it == ar.arrays.end()) {
      throw IoError("Model::load: missing parameter " + name);
    }
    if (it->second.dims != var.dims()) {
      throw IoError("Model::load: shape mismatch for " + name);
    }
    nn::Var handle = var;  // shares the node
    handle.value() = it->second;
  }
  return model;
}

}  // namespace amodal
