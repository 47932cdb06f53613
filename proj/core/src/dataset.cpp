// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

#include "amodal/errors.hpp"

namespace amodal {

using ordered_json = nlohmann::ordered_json;

void InstanceAnnotation::validate(double tol) const {
  if (!visible_mask.same_resolution(amodal_mask)) {
    throw InvalidAnnotationError("annotation: mask resolution mismatch");
  }
  for (int i = 0; i < amodal_mask.size(); ++i) {
    if (visible_mask.data()[i] > amodal_mask.data()[i] + tol) {
      throw InvalidAnnotationError(
          "annotation: visible mask exceeds amodal mask");
    }
  }
  const double rate = amodal::occlusion_rate(visible_mask, amodal_mask);
  if (std::abs(rate - occlusion_rate) > tol) {
    throw InvalidAnnotationError(
        "annotation: stored occlusion_rate disagrees with masks");
  }
}

InstanceAnnotation DatasetInstance::annotation() const {
  InstanceAnnotation ann;
  ann.category_id = category_id;
  ann.box = box;
  ann.amodal_mask = amodal_mask();
  ann.visible_mask = visible_mask();
  ann.occlusion_rate = occlusion_rate;
  return ann;
}

namespace {

ordered_json rle_to_json(const Rle& rle) {
  ordered_json j;
  j["size"] = {rle.height, rle.width};
  j["counts"] = rle.counts;
  return j;
}

Rle rle_from_json(const nlohmann::json& j) {
  Rle rle;
  rle.height = j.at("size").at(0).get<int>();
  rle.width = j.at("size").at(1).get<int>();
  rle.counts = j.at("counts").get<std::vector<int>>();
  return rle;
}

}  // namespace

void write_dataset_json(const std::filesystem::path& path,
                        const std::vector<SceneRecord>& scenes,
                        const std::vector<Category>& categories,
                        uint64_t seed) {
  ordered_json root;
  root["info"] = {{"description", "amodalseg synthetic occlusion dataset"},
                  {"version", "1.0"},
                  {"seed", seed}};
  root["images"] = ordered_json::array();
  root["annotations"] = ordered_json::array();
  root["categories"] = ordered_json::array();
  for (const auto& cat : categories) {
    root["categories"].push_back({{"id", cat.id}, {"name", cat.name}});
  }
  for (const auto& scene : scenes) {
    root["images"].push_back({{"id", scene.image_id},
                              {"file_name", scene.file_name},
                              {"width", scene.width},
                              {"height", scene.height}});
    for (const auto& inst : scene.instances) {
      ordered_json a;
      a["id"] = inst.id;
      a["image_id"] = scene.image_id;
      a["category_id"] = inst.category_id;
      a["bbox"] = {inst.box.x_min, inst.box.y_min, inst.box.width(),
                   inst.box.height()};
      a["area"] = [&] {
        long cells = 0;
        for (size_t i = 1; i < inst.amodal_seg.counts.size(); i += 2) {
          cells += inst.amodal_seg.counts[i];
        }
        return cells;
      }();
      a["amodal_seg"] = rle_to_json(inst.amodal_seg);
      a["visible_seg"] = rle_to_json(inst.visible_seg);
      a["occlusion_rate"] = inst.occlusion_rate;
      root["annotations"].push_back(std::move(a));
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_dataset_json: cannot open " + path.string());
  out << root.dump(1, '\t') << '\n';
}

Dataset Dataset::load(const std::filesystem::path& split_dir) {
  const auto ann_path = split_dir / "annotations.json";
  std::ifstream in(ann_path, std::ios::binary);
  if (!in) throw IoError("Dataset::load: cannot open " + ann_path.string());
  nlohmann::json root;
  in >> root;

  Dataset ds;
  ds.root = split_dir;
  for (const auto& c : root.at("categories")) {
    ds.categories.push_back({c.at("id").get<int>(), c.at("name").get<std::string>()});
  }
  std::map<int, size_t> index_by_id;
  for (const auto& im : root.at("images")) {
    SceneRecord scene;
    scene.image_id = im.at("id").get<int>();
    scene.file_name = im.at("file_name").get<std::string>();
    scene.width = im.at("width").get<int>();
    scene.height = im.at("height").get<int>();
    index_by_id[scene.image_id] = ds.scenes.size();
    ds.scenes.push_back(std::move(scene));
  }
  for (const auto& a : root.at("annotations")) {
    DatasetInstance inst;
    inst.id = a.at("id").get<int>();
    inst.category_id = a.at("category_id").get<int>();
    const auto& bb = a.at("bbox");
    inst.box.x_min = bb.at(0).get<double>();
    inst.box.y_min = bb.at(1).get<double>();
    inst.box.x_max = inst.box.x_min + bb.at(2).get<double>();
    inst.box.y_max = inst.box.y_min + bb.at(3).get<double>();
    inst.amodal_seg = rle_from_json(a.at("amodal_seg"));
    inst.visible_seg = rle_from_json(a.at("visible_seg"));
    inst.occlusion_rate = a.at("occlusion_rate").get<double>();
    const int image_id = a.at("image_id").get<int>();
    auto it = index_by_id.find(image_id);
    if (it == index_by_id.end()) {
      throw IoError("Dataset::load: annotation references unknown image id " +
                    std::to_string(image_id));
    }
    ds.scenes[it->second].instances.push_back(std::move(inst));
  }
  return ds;
}

Image Dataset::load_image(int scene_index) const {
  return read_png(root / "images" / scenes[scene_index].file_name);
}

int Dataset::scene_index_by_image_id(int image_id) const {
  for (size_t i = 0; i < scenes.size(); ++i) {
    if (scenes[i].image_id == image_id) return static_cast<int>(i);
  }
  throw IoError("scene_index_by_image_id: unknown image id " +
                std::to_string(image_id));
}

std::vector<PairRecord> load_pairs(const std::filesystem::path& split_dir) {
  const auto path = split_dir / "pairs.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_pairs: cannot open " + path.string());
  nlohmann::json root;
  in >> root;
  std::vector<PairRecord> pairs;
  for (const auto& p : root.at("pairs")) {
    pairs.push_back({p.at("image_a").get<int>(), p.at("image_b").get<int>(),
                     p.at("target_ann_a").get<int>(),
                     p.at("target_ann_b").get<int>()});
  }
  return pairs;
}

void write_pairs_json(const std::filesystem::path& path,
                      const std::vector<PairRecord>& pairs) {
  ordered_json root;
  root["pairs"] = ordered_json::array();
  for (const auto& p : pairs) {
    root["pairs"].push_back({{"image_a", p.image_a},
                             {"image_b", p.image_b},
                             {"target_ann_a", p.target_ann_a},
                             {"target_ann_b", p.target_ann_b}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_pairs_json: cannot open " + path.string());
  out << root.dump(1, '\t') << '\n';
}

}  // namespace amodal
