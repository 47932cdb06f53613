// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <vector>

#include "amodal/mask.hpp"

namespace amodal {

/// Column-major run-length encoding of a binary mask (COCO uncompressed
/// convention: counts alternate 0-runs and 1-runs, starting with zeros).
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<int> counts;
};

Rle rle_encode(const Mask& m, double threshold = 0.5);
Mask rle_decode(const Rle& rle);

}  // namespace amodal
