// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/shape_prior.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amodal/errors.hpp"
#include "amodal/optimizer.hpp"
#include "amodal/serialize.hpp"
#include "amodal/synthetic.hpp"

namespace amodal {

MaskAutoencoder::MaskAutoencoder(int mask_size, int embed_dim,
                                 uint64_t init_seed)
    : mask_size_(mask_size), embed_dim_(embed_dim) {
  if (mask_size % 4 != 0) {
    throw ConfigError("MaskAutoencoder: mask_size must be divisible by 4");
  }
  std::mt19937_64 rng(init_seed);
  const int q = mask_size / 4;  // spatial size after two stride-2 convs
  const int c1 = 8, c2 = 16;
  auto he = [](int fan_in) { return std::sqrt(2.0 / fan_in); };
  enc1_w_ = params_.create("ae.enc1.w", {c1, 1 * 9, 1}, he(9), rng);
  enc1_b_ = params_.create("ae.enc1.b", {c1, 1, 1}, 0.0, rng);
  enc2_w_ = params_.create("ae.enc2.w", {c2, c1 * 9, 1}, he(c1 * 9), rng);
  enc2_b_ = params_.create("ae.enc2.b", {c2, 1, 1}, 0.0, rng);
  enc_fc_w_ = params_.create("ae.enc_fc.w", {embed_dim, c2 * q * q, 1},
                             he(c2 * q * q), rng);
  enc_fc_b_ = params_.create("ae.enc_fc.b", {embed_dim, 1, 1}, 0.0, rng);
  dec_fc_w_ = params_.create("ae.dec_fc.w", {c2 * q * q, embed_dim, 1},
                             he(embed_dim), rng);
  dec_fc_b_ = params_.create("ae.dec_fc.b", {c2 * q * q, 1, 1}, 0.0, rng);
  dec1_w_ = params_.create("ae.dec1.w", {c2, c1 * 4, 1}, he(c2 * 4), rng);
  dec1_b_ = params_.create("ae.dec1.b", {c1, 1, 1}, 0.0, rng);
  dec2_w_ = params_.create("ae.dec2.w", {c1, 1 * 4, 1}, he(c1 * 4), rng);
  dec2_b_ = params_.create("ae.dec2.b", {1, 1, 1}, 0.0, rng);
}

nn::Var MaskAutoencoder::encode_var(const nn::Var& x) const {
  nn::Var h = nn::relu(nn::conv2d(x, enc1_w_, enc1_b_, 2, 1));
  h = nn::relu(nn::conv2d(h, enc2_w_, enc2_b_, 2, 1));
  return nn::linear(h, enc_fc_w_, enc_fc_b_);
}

nn::Var MaskAutoencoder::decode_logits_var(const nn::Var& embedding) const {
  const int q = mask_size_ / 4;
  nn::Var h = nn::relu(nn::linear(embedding, dec_fc_w_, dec_fc_b_));
  h = nn::reshape(h, 16, q, q);
  h = nn::relu(nn::deconv2x2(h, dec1_w_, dec1_b_));
  return nn::deconv2x2(h, dec2_w_, dec2_b_);
}

std::vector<double> MaskAutoencoder::encode(const Mask& m) const {
  if (m.height() != mask_size_ || m.width() != mask_size_) {
    throw ShapeError("MaskAutoencoder::encode: unexpected mask resolution");
  }
  nn::NoGradGuard guard;
  nn::Var e = encode_var(nn::Var::leaf(Tensor::from_mask(m)));
  return e.value().data;
}

Mask MaskAutoencoder::decode(const std::vector<double>& embedding) const {
  if (static_cast<int>(embedding.size()) != embed_dim_) {
    throw ShapeError("MaskAutoencoder::decode: unexpected embedding size");
  }
  nn::NoGradGuard guard;
  Tensor e(embed_dim_, 1, 1);
  e.data = embedding;
  nn::Var logits = decode_logits_var(nn::Var::leaf(std::move(e)));
  nn::Var probs = nn::sigmoid(logits);
  return probs.value().channel_as_mask(0);
}

MaskAutoencoder train_autoencoder(const std::vector<Mask>& masks, int epochs,
                                  uint64_t seed,
                                  const AutoencoderTrainOptions& opts,
                                  std::vector<double>* epoch_bce) {
  if (masks.empty()) {
    throw BuildError("train_autoencoder: empty mask set");
  }
  for (const auto& m : masks) {
    if (m.height() != opts.mask_size || m.width() != opts.mask_size) {
      throw ShapeError("train_autoencoder: masks must be box-normalized to " +
                       std::to_string(opts.mask_size));
    }
  }
  MaskAutoencoder ae(opts.mask_size, opts.embed_dim,
                     derive_seed(seed, 0xAE11ull, 0));
  SgdOptimizer opt(ae.params(),
                   SgdConfig{opts.lr, opts.momentum, /*weight_decay=*/0.0});
  std::mt19937_64 rng(derive_seed(seed, 0xAE22ull, 0));

  std::vector<size_t> order(masks.size());
  std::iota(order.begin(), order.end(), 0);

  auto full_set_bce = [&]() {
    nn::NoGradGuard guard;
    double total = 0.0;
    for (const auto& m : masks) {
      Tensor t = Tensor::from_mask(m);
      nn::Var logits =
          ae.decode_logits_var(ae.encode_var(nn::Var::leaf(t)));
      total += nn::bce_with_logits_mean(logits, t).scalar();
    }
    return total / static_cast<double>(masks.size());
  };

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(opts.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(opts.batch_size));
      std::vector<nn::Var> losses;
      for (size_t i = start; i < end; ++i) {
        Tensor t = Tensor::from_mask(masks[order[i]]);
        nn::Var logits =
            ae.decode_logits_var(ae.encode_var(nn::Var::leaf(t)));
        losses.push_back(nn::bce_with_logits_mean(logits, t));
      }
      nn::Var loss = nn::weighted_sum(
          losses, std::vector<double>(losses.size(), 1.0 / losses.size()));
      opt.zero_grad();
      nn::backward(loss);
      opt.step();
    }
    if (epoch_bce) epoch_bce->push_back(full_set_bce());
  }
  return ae;
}

KmeansResult kmeans_lloyd(const std::vector<std::vector<double>>& points,
                          const std::vector<std::vector<double>>& init,
                          int max_iters) {
  if (points.empty() || init.empty()) {
    throw BuildError("kmeans_lloyd: empty input");
  }
  const size_t dim = points[0].size();
  KmeansResult res;
  res.centroids = init;
  res.assignment.assign(points.size(), -1);

  auto dist2 = [&](const std::vector<double>& a,
                   const std::vector<double>& b) {
    double d = 0.0;
    for (size_t i = 0; i < dim; ++i) {
      const double diff = a[i] - b[i];
      d += diff * diff;
    }
    return d;
  };

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (size_t p = 0; p < points.size(); ++p) {
      int best = 0;
      double best_d = dist2(points[p], res.centroids[0]);
      for (size_t c = 1; c < res.centroids.size(); ++c) {
        const double d = dist2(points[p], res.centroids[c]);
        if (d < best_d) {  // strict: ties keep the lower index
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (res.assignment[p] != best) {
        res.assignment[p] = best;
        changed = true;
      }
    }
    res.iterations = iter + 1;
    if (!changed) break;
    // Update step: centroid = mean of assigned points.
    std::vector<std::vector<double>> sums(res.centroids.size(),
                                          std::vector<double>(dim, 0.0));
    std::vector<int> counts(res.centroids.size(), 0);
    for (size_t p = 0; p < points.size(); ++p) {
      const int c = res.assignment[p];
      ++counts[c];
      for (size_t i = 0; i < dim; ++i) sums[c][i] += points[p][i];
    }
    for (size_t c = 0; c < res.centroids.size(); ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (size_t i = 0; i < dim; ++i) {
        res.centroids[c][i] = sums[c][i] / counts[c];
      }
    }
  }
  res.objective = 0.0;
  for (size_t p = 0; p < points.size(); ++p) {
    res.objective += dist2(points[p], res.centroids[res.assignment[p]]);
  }
  return res;
}

std::vector<std::vector<double>> kmeans_pp_init(
    const std::vector<std::vector<double>>& points, int k,
    std::mt19937_64& rng) {
  if (k < 1 || k > static_cast<int>(points.size())) {
    throw BuildError("kmeans_pp_init: k out of range");
  }
  std::vector<std::vector<double>> centroids;
  std::uniform_int_distribution<size_t> first(0, points.size() - 1);
  centroids.push_back(points[first(rng)]);
  std::vector<double> d2(points.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (size_t p = 0; p < points.size(); ++p) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centroids) {
        double d = 0.0;
        for (size_t i = 0; i < c.size(); ++i) {
          const double diff = points[p][i] - c[i];
          d += diff * diff;
        }
        best = std::min(best, d);
      }
      d2[p] = best;
      total += best;
    }
    if (total <= 0.0) {
      // All remaining points coincide with a centroid; pick uniformly.
      centroids.push_back(points[first(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng);
    size_t pick = points.size() - 1;
    for (size_t p = 0; p < points.size(); ++p) {
      r -= d2[p];
      if (r <= 0.0) {
        pick = p;
        break;
      }
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

ShapeCodebook ShapeCodebook::build(
    MaskAutoencoder autoencoder,
    const std::map<int, std::vector<Mask>>& masks_by_category, int k,
    uint64_t seed) {
  if (k < 1) throw BuildError("ShapeCodebook::build: k must be >= 1");
  ShapeCodebook cb;
  cb.autoencoder_ = std::move(autoencoder);
  cb.seed_ = seed;
  for (const auto& [category_id, masks] : masks_by_category) {
    if (masks.empty()) {
      throw BuildError("ShapeCodebook::build: no masks for category " +
                       std::to_string(category_id));
    }
    std::vector<std::vector<double>> embeddings;
    embeddings.reserve(masks.size());
    for (const auto& m : masks) embeddings.push_back(cb.autoencoder_.encode(m));

    CodebookCategory cat;
    cat.category_id = category_id;
    cat.requested_k = k;
    const int effective_k =
        std::min<int>(k, static_cast<int>(embeddings.size()));
    std::mt19937_64 rng(
        derive_seed(seed, 0xC0DEull, static_cast<uint64_t>(category_id)));
    auto init = kmeans_pp_init(embeddings, effective_k, rng);
    KmeansResult res = kmeans_lloyd(embeddings, init);
    cat.centroids = std::move(res.centroids);
    cat.kmeans_iterations = res.iterations;
    cb.categories_.emplace(category_id, std::move(cat));
  }
  return cb;
}

bool ShapeCodebook::has_category(int category_id) const {
  return categories_.count(category_id) > 0;
}

const CodebookCategory& ShapeCodebook::category(int category_id) const {
  auto it = categories_.find(category_id);
  if (it == categories_.end()) {
    throw Error("ShapeCodebook: unknown category " +
                std::to_string(category_id));
  }
  return it->second;
}

std::vector<int> ShapeCodebook::category_ids() const {
  std::vector<int> ids;
  for (const auto& [id, _] : categories_) ids.push_back(id);
  return ids;
}

ShapeCodebook::SearchResult ShapeCodebook::search(const Mask& query,
                                                  int category_id,
                                                  int k) const {
  const CodebookCategory& cat = category(category_id);
  if (k < 1 || k > static_cast<int>(cat.centroids.size())) {
    throw ShapeError("ShapeCodebook::search: k out of range");
  }
  Mask normalized = query;
  if (normalized.height() != autoencoder_.mask_size() ||
      normalized.width() != autoencoder_.mask_size()) {
    normalized = resize_mask(normalized, autoencoder_.mask_size(),
                             autoencoder_.mask_size());
  }
  const std::vector<double> e = autoencoder_.encode(normalized);

  std::vector<std::pair<double, int>> order;  // (distance, index)
  order.reserve(cat.centroids.size());
  for (size_t c = 0; c < cat.centroids.size(); ++c) {
    double d2 = 0.0;
    for (size_t i = 0; i < e.size(); ++i) {
      const double diff = e[i] - cat.centroids[c][i];
      d2 += diff * diff;
    }
    order.emplace_back(std::sqrt(d2), static_cast<int>(c));
  }
  std::sort(order.begin(), order.end());  // pair: distance then lower index

  SearchResult out;
  for (int i = 0; i < k; ++i) {
    out.distances.push_back(order[i].first);
    out.centroid_index.push_back(order[i].second);
    out.masks.push_back(
        autoencoder_.decode(cat.centroids[order[i].second]));
  }
  return out;
}

double ShapeCodebook::shape_similarity(const Mask& pred, int category_id,
                                       SimilarityNorm norm) const {
  SearchResult nearest = search(pred, category_id, 1);
  Mask p = pred;
  const int ms = autoencoder_.mask_size();
  if (p.height() != ms || p.width() != ms) p = resize_mask(p, ms, ms);
  const Mask& prior = nearest.masks[0];
  const double n = static_cast<double>(ms) * ms;
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double d = std::abs(p.data()[i] - prior.data()[i]);
    acc += norm == SimilarityNorm::kL1 ? d : d * d;
  }
  const double dist =
      norm == SimilarityNorm::kL1 ? acc / n : std::sqrt(acc / n);
  return std::clamp(1.0 - dist, 0.0, 1.0);
}

void ShapeCodebook::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json meta;
  meta["kind"] = "amodalseg_codebook";
  meta["mask_size"] = autoencoder_.mask_size();
  meta["embed_dim"] = autoencoder_.embed_dim();
  meta["seed"] = seed_;
  meta["categories"] = nlohmann::ordered_json::array();
  std::vector<std::pair<std::string, const Tensor*>> arrays;
  for (const auto& [name, var] : autoencoder_.params().all()) {
    arrays.emplace_back(name, &var.value());
  }
  std::vector<Tensor> centroid_tensors;
  centroid_tensors.reserve(categories_.size());
  for (const auto& [id, cat] : categories_) {
    meta["categories"].push_back({{"id", id},
                                  {"requested_k", cat.requested_k},
                                  {"iterations", cat.kmeans_iterations},
                                  {"k", cat.centroids.size()}});
    Tensor t(static_cast<int>(cat.centroids.size()),
             autoencoder_.embed_dim(), 1);
    for (size_t c = 0; c < cat.centroids.size(); ++c) {
      std::copy(cat.centroids[c].begin(), cat.centroids[c].end(),
                t.data.begin() + static_cast<size_t>(c) *
                                     autoencoder_.embed_dim());
    }
    centroid_tensors.push_back(std::move(t));
  }
  size_t idx = 0;
  for (const auto& [id, _] : categories_) {
    arrays.emplace_back("codebook.cat" + std::to_string(id),
                        &centroid_tensors[idx++]);
  }
  save_archive(path, meta.dump(), arrays);
}

ShapeCodebook ShapeCodebook::load(const std::filesystem::path& path) {
  Archive ar = load_archive(path);
  const auto meta = nlohmann::json::parse(ar.meta_json);
  if (meta.value("kind", "") != "amodalseg_codebook") {
    throw IoError("ShapeCodebook::load: unexpected archive kind");
  }
  ShapeCodebook cb;
  cb.seed_ = meta.at("seed").get<uint64_t>();
  cb.autoencoder_ = MaskAutoencoder(meta.at("mask_size").get<int>(),
                                    meta.at("embed_dim").get<int>(), 0);
  for (const auto& [name, var] : cb.autoencoder_.params().all()) {
    auto it = ar.arrays.find(name);
    if (it == ar.arrays.end()) {
      throw IoError("ShapeCodebook::load: missing parameter " + name);
    }
    nn::Var handle = var;
    handle.value() = it->second;
  }
  const int dim = cb.autoencoder_.embed_dim();
  for (const auto& c : meta.at("categories")) {
    CodebookCategory cat;
    cat.category_id = c.at("id").get<int>();
    cat.requested_k = c.at("requested_k").get<int>();
    cat.kmeans_iterations = c.at("iterations").get<int>();
    auto it = ar.arrays.find("codebook.cat" + std::to_string(cat.category_id));
    if (it == ar.arrays.end()) {
      throw IoError("ShapeCodebook::load: missing centroids for category " +
                    std::to_string(cat.category_id));
    }
    const Tensor& t = it->second;
    cat.centroids.assign(t.dims[0], std::vector<double>(dim));
    for (int k = 0; k < t.dims[0]; ++k) {
      std::copy(t.data.begin() + static_cast<size_t>(k) * dim,
                t.data.begin() + static_cast<size_t>(k + 1) * dim,
                cat.centroids[k].begin());
    }
    cb.categories_.emplace(cat.category_id, std::move(cat));
  }
  return cb;
}

std::map<int, std::vector<Mask>> collect_normalized_amodal_masks(
    const Dataset& dataset, int mask_size) {
  std::map<int, std::vector<Mask>> out;
  for (const auto& scene : dataset.scenes) {
    for (const auto& inst : scene.instances) {
      const Mask amodal = inst.amodal_mask();
      const BoundingBox box = tight_box(amodal);
      if (!box.valid()) continue;
      out[inst.category_id].push_back(
          binarize(crop_resize(amodal, box, mask_size, mask_size)));
    }
  }
  return out;
}

std::vector<std::array<double, 2>> project_codebook(const ShapeCodebook& cb,
                                                    int category_id) {
  const auto& cat = cb.category(category_id);
  const int n = static_cast<int>(cat.centroids.size());
  const int d = cb.embed_dim();
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = cat.centroids[i][j];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Eigen::MatrixXd cov = x.transpose() * x / std::max(1, n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues ascend; take the last two columns as the top components.
  Eigen::MatrixXd components(d, 2);
  components.col(0) = solver.eigenvectors().col(d - 1);
  components.col(1) = d >= 2 ? solver.eigenvectors().col(d - 2)
                             : Eigen::VectorXd::Zero(d);
  // Fix the sign so the largest-magnitude loading is positive.
  for (int c = 0; c < 2; ++c) {
    int arg = 0;
    for (int j = 1; j < d; ++j) {
      if (std::abs(components(j, c)) > std::abs(components(arg, c))) arg = j;
    }
    if (components(arg, c) < 0.0) components.col(c) *= -1.0;
  }
  Eigen::MatrixXd proj = x * components;
  std::vector<std::array<double, 2>> points(n);
  for (int i = 0; i < n; ++i) points[i] = {proj(i, 0), proj(i, 1)};
  return points;
}

}  // namespace amodal
