// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "amodal/image.hpp"
#include "amodal/rle.hpp"
#include "amodal/types.hpp"

namespace amodal {

/// Instance as stored on disk: masks kept run-length encoded and decoded on
/// demand, which keeps large splits small in memory.
struct DatasetInstance {
  int id = 0;
  int category_id = 0;
  BoundingBox box;  // amodal tight box
  Rle amodal_seg;
  Rle visible_seg;
  double occlusion_rate = 0.0;

  Mask amodal_mask() const { return rle_decode(amodal_seg); }
  Mask visible_mask() const { return rle_decode(visible_seg); }
  InstanceAnnotation annotation() const;
};

struct SceneRecord {
  int image_id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<DatasetInstance> instances;
};

/// Occluder-swap pair: two scenes sharing the target instance geometry.
struct PairRecord {
  int image_a = 0;
  int image_b = 0;
  int target_ann_a = 0;
  int target_ann_b = 0;
};

/// One split (train/val/pairs): images/ directory plus annotations.json.
struct Dataset {
  std::filesystem::path root;
  std::vector<SceneRecord> scenes;
  std::vector<Category> categories;

  Image load_image(int scene_index) const;
  int scene_index_by_image_id(int image_id) const;

  static Dataset load(const std::filesystem::path& split_dir);
};

void write_dataset_json(const std::filesystem::path& path,
                        const std::vector<SceneRecord>& scenes,
                        const std::vector<Category>& categories,
                        uint64_t seed);

std::vector<PairRecord> load_pairs(const std::filesystem::path& split_dir);
void write_pairs_json(const std::filesystem::path& path,
                      const std::vector<PairRecord>& pairs);

}  // namespace amodal
