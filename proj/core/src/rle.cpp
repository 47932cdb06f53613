// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/rle.hpp"

#include "amodal/errors.hpp"

namespace amodal {

Rle rle_encode(const Mask& m, double threshold) {
  Rle rle;
  rle.height = m.height();
  rle.width = m.width();
  int run = 0;
  bool current = false;  // runs start with zeros
  for (int x = 0; x < m.width(); ++x) {
    for (int y = 0; y < m.height(); ++y) {
      const bool v = m.at(y, x) >= threshold;
      if (v == current) {
        ++run;
      } else {
        rle.counts.push_back(run);
        current = v;
        run = 1;
      }
    }
  }
  rle.counts.push_back(run);
  return rle;
}

Mask rle_decode(const Rle& rle) {
  Mask m(rle.height, rle.width);
  long total = 0;
  for (int c : rle.counts) total += c;
  if (total != static_cast<long>(rle.height) * rle.width) {
    throw InvalidAnnotationError("rle_decode: counts do not cover the mask");
  }
  long idx = 0;
  bool current = false;
  for (int c : rle.counts) {
    if (current) {
      for (long i = idx; i < idx + c; ++i) {
        m.at(static_cast<int>(i % rle.height),
             static_cast<int>(i / rle.height)) = 1.0;
      }
    }
    idx += c;
    current = !current;
  }
  return m;
}

}  // namespace amodal
