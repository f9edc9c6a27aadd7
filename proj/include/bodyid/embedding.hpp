#pragma once

#include <cstdint>
#include <vector>

#include "bodyid/adam.hpp"
#include "bodyid/error.hpp"
#include "bodyid/geometry.hpp"
#include "bodyid/losses.hpp"
#include "bodyid/rng.hpp"

namespace bodyid {

// Unit-norm identity feature.
struct IdFeature {
  VecX vector;
};

struct EmbedTrainConfig {
  int embed_dim = 32;
  int epochs = 200;
  double lr = 0.01;
  std::uint64_t seed = 0;
  double arc_scale = 30.0;
  double arc_margin = 0.5;
};

// Bias-free linear embedding with arc-margin class weights.
struct EmbeddingHead {
  MatX weight;         // embed_dim x input_dim
  MatX class_weights;  // classes x embed_dim
  EmbedTrainConfig config;
  double initial_loss = 0.0;
  double final_loss = 0.0;

  int input_dim() const { return static_cast<int>(weight.cols()); }
  int embed_dim() const { return static_cast<int>(weight.rows()); }
  int classes() const { return static_cast<int>(class_weights.rows()); }
};

inline IdFeature embed(const EmbeddingHead& head, const VecX& shape_feature) {
  if (shape_feature.size() != head.weight.cols())
    throw DimensionError("embed: feature has " + std::to_string(shape_feature.size()) +
                         " dims, head expects " + std::to_string(head.weight.cols()));
  VecX y = head.weight * shape_feature;
  const double norm = y.norm();
  if (norm <= 1e-12) throw DataError("embed: embedding collapsed to zero");
  return IdFeature{y / norm};
}

struct LabeledFeature {
  VecX feature;
  int label = 0;
};

// Full-batch adaptive-moment training of the head on the mean arc-margin
// loss. Deterministic for a given config seed.
inline EmbeddingHead train_head(const std::vector<LabeledFeature>& dataset,
                                const EmbedTrainConfig& config) {
  if (config.embed_dim < 2) throw ConfigError("train_head: embed_dim must be >= 2");
  if (config.epochs < 0) throw ConfigError("train_head: epochs must be >= 0");
  if (dataset.empty()) throw DataError("train_head: empty dataset");
  const int input_dim = static_cast<int>(dataset.front().feature.size());
  int classes = 0;
  for (const auto& item : dataset) {
    if (item.feature.size() != input_dim)
      throw DimensionError("train_head: inconsistent feature dims");
    if (item.label < 0) throw ConfigError("train_head: labels must be non-negative");
    classes = std::max(classes, item.label + 1);
  }
  std::vector<int> per_class(classes, 0);
  for (const auto& item : dataset) ++per_class[item.label];
  if (classes < 2) throw ConfigError("train_head: need at least two classes");
  for (int c = 0; c < classes; ++c)
    if (per_class[c] < 2)
      throw ConfigError("train_head: class " + std::to_string(c) + " has fewer than 2 samples");

  Rng rng(config.seed);
  EmbeddingHead head;
  head.config = config;
  head.weight.resize(config.embed_dim, input_dim);
  head.class_weights.resize(classes, config.embed_dim);
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double c_scale = 1.0 / std::sqrt(static_cast<double>(config.embed_dim));
  for (int r = 0; r < config.embed_dim; ++r)
    for (int c = 0; c < input_dim; ++c) head.weight(r, c) = rng.normal(0.0, w_scale);
  for (int r = 0; r < classes; ++r)
    for (int c = 0; c < config.embed_dim; ++c) head.class_weights(r, c) = rng.normal(0.0, c_scale);

  ArcMarginConfig arc;
  arc.scale = config.arc_scale;
  arc.margin = config.arc_margin;
  arc.classes = classes;
  arc.embed_dim = config.embed_dim;

  const double inv_n = 1.0 / static_cast<double>(dataset.size());
  auto batch = [&](MatX& d_weight, MatX& d_class) {
    double loss = 0.0;
    for (const auto& item : dataset) {
      const VecX raw = head.weight * item.feature;
      const ArcMarginResult res = arc_margin_loss(raw, head.class_weights, item.label, arc);
      loss += res.value * inv_n;
      d_weight.noalias() += inv_n * res.grad_embedding * item.feature.transpose();
      d_class += inv_n * res.grad_class_weights;
    }
    return loss;
  };

  Adam adam_w{};
  Adam adam_c{};
  adam_w.init(head.weight.size());
  adam_c.init(head.class_weights.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    MatX d_weight = MatX::Zero(config.embed_dim, input_dim);
    MatX d_class = MatX::Zero(classes, config.embed_dim);
    const double loss = batch(d_weight, d_class);
    if (!std::isfinite(loss))
      throw DivergenceError("train_head: non-finite loss at epoch " + std::to_string(epoch));
    if (epoch == 0) head.initial_loss = loss;

    VecX w_flat = Eigen::Map<VecX>(head.weight.data(), head.weight.size());
    VecX c_flat = Eigen::Map<VecX>(head.class_weights.data(), head.class_weights.size());
    adam_w.step(w_flat, Eigen::Map<VecX>(d_weight.data(), d_weight.size()), config.lr);
    adam_c.step(c_flat, Eigen::Map<VecX>(d_class.data(), d_class.size()), config.lr);
    head.weight = Eigen::Map<MatX>(w_flat.data(), config.embed_dim, input_dim);
    head.class_weights = Eigen::Map<MatX>(c_flat.data(), classes, config.embed_dim);
  }
  {
    MatX d_weight = MatX::Zero(config.embed_dim, input_dim);
    MatX d_class = MatX::Zero(classes, config.embed_dim);
    head.final_loss = batch(d_weight, d_class);
    if (config.epochs == 0) head.initial_loss = head.final_loss;
  }
  return head;
}

// Fraction of dataset items whose nearest class weight (by cosine) is their
// own label.
inline double classification_accuracy(const EmbeddingHead& head,
                                      const std::vector<LabeledFeature>& dataset) {
  if (dataset.empty()) throw DataError("classification_accuracy: empty dataset");
  int correct = 0;
  for (const auto& item : dataset) {
    const IdFeature f = embed(head, item.feature);
    int best = -1;
    double best_cos = -2.0;
    for (int c = 0; c < head.classes(); ++c) {
      const double n = head.class_weights.row(c).norm();
      if (n <= 1e-12) continue;
      const double cosine = head.class_weights.row(c).dot(f.vector) / n;
      if (cosine > best_cos) {
        best_cos = cosine;
        best = c;
      }
    }
    if (best == item.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace bodyid
