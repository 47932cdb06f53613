// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "amodal/backbone.hpp"

namespace amodal {

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
};

/// SGD with momentum. Weight decay is applied as direct shrinkage
/// (value *= 1 - wd) so it acts even at learning rate zero.
class SgdOptimizer {
 public:
  SgdOptimizer(ParamRegistry& params, SgdConfig cfg);

  void step();
  void zero_grad();

 private:
  ParamRegistry* params_;
  SgdConfig cfg_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace amodal
