// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <optional>
#include <vector>

#include "amodal/heads.hpp"
#include "amodal/visible_refine.hpp"

namespace amodal {

/// Stack retrieved shape priors (resized to the feature's spatial size) as
/// constant extra channels. Throws ShapeError when the count does not match
/// the head's expected prior channels.
nn::Var stack_prior_channels(const std::vector<Mask>& priors, int h, int w);

/// Refined amodal pass: f_a on the visible-masked feature concatenated with
/// the prior channels. `visible_attention` empty = the no-visible-attention
/// ablation (plain feature + priors). `priors` empty with a k=0 head = the
/// no-shape-prior ablation.
MaskHeadActivations refine_amodal(const MaskHead& f_a, const nn::Var& feature,
                                  const std::optional<nn::Var>& visible_prob,
                                  const std::vector<Mask>& priors);

/// Eq-(5)-style matching between the zero-padded plain pass and the actual
/// refined pass of the amodal head.
nn::Var amodal_feature_matching(const MaskHead& f_a,
                                const std::vector<nn::Var>& features,
                                const std::vector<nn::Var>& refined_visible,
                                const std::vector<std::vector<Mask>>& priors,
                                const FeatureMatchConfig& fm);

}  // namespace amodal
