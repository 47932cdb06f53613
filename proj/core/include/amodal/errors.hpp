// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <stdexcept>
#include <string>

namespace amodal {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/mask dimension mismatch.
struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error(what) {}
};

// Ground-truth annotation violates an invariant (e.g. zero-area amodal mask).
struct InvalidAnnotationError : Error {
  explicit InvalidAnnotationError(const std::string& what) : Error(what) {}
};

// Synthetic shape could not be placed on the canvas.
struct PlacementError : Error {
  explicit PlacementError(const std::string& what) : Error(what) {}
};

// Codebook or autoencoder construction failed.
struct BuildError : Error {
  explicit BuildError(const std::string& what) : Error(what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace amodal
