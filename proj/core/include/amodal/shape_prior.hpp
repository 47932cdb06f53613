// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "amodal/backbone.hpp"
#include "amodal/dataset.hpp"
#include "amodal/mask.hpp"

namespace amodal {

/// Mask autoencoder: 2-conv encoder to a D-dim embedding, 2-deconv decoder
/// back to a [0,1] mask of the same resolution.
class MaskAutoencoder {
 public:
  MaskAutoencoder() = default;
  MaskAutoencoder(int mask_size, int embed_dim, uint64_t init_seed);

  std::vector<double> encode(const Mask& m) const;
  Mask decode(const std::vector<double>& embedding) const;

  /// Graph-building passes used during training.
  nn::Var encode_var(const nn::Var& x) const;
  nn::Var decode_logits_var(const nn::Var& embedding) const;

  int mask_size() const { return mask_size_; }
  int embed_dim() const { return embed_dim_; }
  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }

 private:
  int mask_size_ = 0;
  int embed_dim_ = 0;
  ParamRegistry params_;
  nn::Var enc1_w_, enc1_b_, enc2_w_, enc2_b_, enc_fc_w_, enc_fc_b_;
  nn::Var dec_fc_w_, dec_fc_b_, dec1_w_, dec1_b_, dec2_w_, dec2_b_;
};

struct AutoencoderTrainOptions {
  double lr = 0.1;
  double momentum = 0.9;
  int batch_size = 16;
  int embed_dim = 32;
  int mask_size = 28;
};

/// Train on box-normalized amodal ground-truth masks. Deterministic under
/// the seed. `epoch_bce` (optional) receives the full-set reconstruction BCE
/// after every epoch. Throws BuildError on an empty mask set.
MaskAutoencoder train_autoencoder(const std::vector<Mask>& masks, int epochs,
                                  uint64_t seed,
                                  const AutoencoderTrainOptions& opts = {},
                                  std::vector<double>* epoch_bce = nullptr);

// ---- K-Means ----

struct KmeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> assignment;
  double objective = 0.0;  // sum of squared distances
  int iterations = 0;
};

/// Lloyd's algorithm from the given initial centroids, until the assignment
/// reaches a fixpoint or max_iters. Ties go to the lower centroid index and
/// empty clusters keep their previous centroid.
KmeansResult kmeans_lloyd(const std::vector<std::vector<double>>& points,
                          const std::vector<std::vector<double>>& init,
                          int max_iters = 100);

std::vector<std::vector<double>> kmeans_pp_init(
    const std::vector<std::vector<double>>& points, int k,
    std::mt19937_64& rng);

// ---- codebook ----

enum class SimilarityNorm { kL1, kL2 };

struct CodebookCategory {
  int category_id = 0;
  int requested_k = 0;  // lowered to the sample count when short of masks
  int kmeans_iterations = 0;
  std::vector<std::vector<double>> centroids;
};

/// Per-category K-Means centroids over autoencoder embeddings of the
/// training amodal masks, plus the autoencoder that maps masks to
/// embeddings. Immutable once built.
class ShapeCodebook {
 public:
  static ShapeCodebook build(MaskAutoencoder autoencoder,
                             const std::map<int, std::vector<Mask>>&
                                 masks_by_category,
                             int k, uint64_t seed);

  const MaskAutoencoder& autoencoder() const { return autoencoder_; }
  int embed_dim() const { return autoencoder_.embed_dim(); }
  uint64_t seed() const { return seed_; }
  bool has_category(int category_id) const;
  const CodebookCategory& category(int category_id) const;
  std::vector<int> category_ids() const;

  struct SearchResult {
    std::vector<Mask> masks;          // decoded priors, ascending distance
    std::vector<double> distances;    // L2 in embedding space
    std::vector<int> centroid_index;  // tie-break: lower index first
  };
  /// Encode the query, pick the k nearest centroids by L2 distance, decode
  /// them. Throws Error for unknown categories and ShapeError for k > K.
  SearchResult search(const Mask& query, int category_id, int k) const;

  /// 1 - normalized distance between `pred` and its nearest decoded prior
  /// (k = 1 retrieval); in [0,1], and 1 exactly when they match.
  double shape_similarity(const Mask& pred, int category_id,
                          SimilarityNorm norm = SimilarityNorm::kL1) const;

  void save(const std::filesystem::path& path) const;
  static ShapeCodebook load(const std::filesystem::path& path);

 private:
  MaskAutoencoder autoencoder_;
  std::map<int, CodebookCategory> categories_;
  uint64_t seed_ = 0;
};

/// Box-normalized (tight-cropped, resized, binarized) amodal GT masks per
/// category, the codebook's training input.
std::map<int, std::vector<Mask>> collect_normalized_amodal_masks(
    const Dataset& dataset, int mask_size);

/// Deterministic centered-PCA projection of a category's centroids to 2-D.
std::vector<std::array<double, 2>> project_codebook(const ShapeCodebook& cb,
                                                    int category_id);

}  // namespace amodal
