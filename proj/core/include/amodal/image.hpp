// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "amodal/autograd.hpp"

namespace amodal {

/// 8-bit RGB image, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // 3 bytes per pixel

  Image() = default;
  Image(int w, int h, uint8_t r = 0, uint8_t g = 0, uint8_t b = 0);

  uint8_t* pixel(int y, int x) { return &rgb[(static_cast<size_t>(y) * width + x) * 3]; }
  const uint8_t* pixel(int y, int x) const {
    return &rgb[(static_cast<size_t>(y) * width + x) * 3];
  }
  void set_pixel(int y, int x, uint8_t r, uint8_t g, uint8_t b);

  /// (3,H,W) tensor with values in [0,1].
  Tensor to_tensor() const;
};

void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

}  // namespace amodal
