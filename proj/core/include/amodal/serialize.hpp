// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "amodal/autograd.hpp"

namespace amodal {

/// Named double arrays plus a free-form JSON metadata string, stored as one
/// binary archive. Used for model checkpoints and codebook files.
struct Archive {
  uint32_t version = 0;
  std::string meta_json;
  std::map<std::string, Tensor> arrays;
};

inline constexpr uint32_t kArchiveVersion = 1;

void save_archive(const std::filesystem::path& path,
                  const std::string& meta_json,
                  const std::vector<std::pair<std::string, const Tensor*>>&
                      arrays);

/// Throws IoError on bad magic or unsupported version.
Archive load_archive(const std::filesystem::path& path);

}  // namespace amodal
