// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/optimizer.hpp"

namespace amodal {

SgdOptimizer::SgdOptimizer(ParamRegistry& params, SgdConfig cfg)
    : params_(&params), cfg_(cfg) {
  for (const auto& [_, var] : params.all()) {
    velocity_.emplace_back(var.value().data.size(), 0.0);
  }
}

void SgdOptimizer::step() {
  const auto& all = params_->all();
  for (size_t p = 0; p < all.size(); ++p) {
    nn::Var var = all[p].second;
    auto& v = velocity_[p];
    auto& grad = var.grad();
    auto& value = var.value().data;
    for (size_t i = 0; i < value.size(); ++i) {
      v[i] = cfg_.momentum * v[i] + grad[i];
      value[i] = (1.0 - cfg_.weight_decay) * value[i] - cfg_.lr * v[i];
    }
  }
}

void SgdOptimizer::zero_grad() { params_->zero_grad(); }

}  // namespace amodal
