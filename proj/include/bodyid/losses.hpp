#pragma once

#include <cmath>
#include <vector>

#include "bodyid/error.hpp"
#include "bodyid/geometry.hpp"
#include "bodyid/kdtree.hpp"
#include "bodyid/silhouette.hpp"

namespace bodyid {

// Symmetric Chamfer between two 2D clouds:
//   value = mean_a min_b |a-b|^2 + mean_b min_a |a-b|^2
// grad_a carries both the forward term and the reverse terms for points of B
// whose nearest neighbor is in A. nn_ab / nn_ba expose the assignments
// (lowest index on ties).
struct ChamferResult {
  double value = 0.0;
  Points2 grad_a;
  std::vector<int> nn_ab;
  std::vector<int> nn_ba;
};

namespace detail {

inline ChamferResult chamfer_from_assignments(const Points2& a, const Points2& b,
                                              std::vector<int> nn_ab, std::vector<int> nn_ba) {
  const Eigen::Index na = a.rows(), nb = b.rows();
  ChamferResult res;
  res.grad_a = Points2::Zero(na, 2);
  double sum_ab = 0.0, sum_ba = 0.0;
  for (Eigen::Index i = 0; i < na; ++i) {
    const double dx = a(i, 0) - b(nn_ab[i], 0);
    const double dy = a(i, 1) - b(nn_ab[i], 1);
    sum_ab += dx * dx + dy * dy;
    res.grad_a(i, 0) += 2.0 * dx / static_cast<double>(na);
    res.grad_a(i, 1) += 2.0 * dy / static_cast<double>(na);
  }
  for (Eigen::Index j = 0; j < nb; ++j) {
    const int i = nn_ba[j];
    const double dx = a(i, 0) - b(j, 0);
    const double dy = a(i, 1) - b(j, 1);
    sum_ba += dx * dx + dy * dy;
    res.grad_a(i, 0) += 2.0 * dx / static_cast<double>(nb);
    res.grad_a(i, 1) += 2.0 * dy / static_cast<double>(nb);
  }
  res.value = sum_ab / static_cast<double>(na) + sum_ba / static_cast<double>(nb);
  res.nn_ab = std::move(nn_ab);
  res.nn_ba = std::move(nn_ba);
  return res;
}

inline std::vector<int> nn_brute(const Points2& from, const Points2& to) {
  std::vector<int> nn(from.rows());
  for (Eigen::Index i = 0; i < from.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (Eigen::Index j = 0; j < to.rows(); ++j) {
      const double dx = from(i, 0) - to(j, 0);
      const double dy = from(i, 1) - to(j, 1);
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        best_j = static_cast<int>(j);
      }
    }
    nn[i] = best_j;
  }
  return nn;
}

inline std::vector<int> nn_indexed(const Points2& from, const KdTree2D& tree) {
  std::vector<int> nn(from.rows());
  for (Eigen::Index i = 0; i < from.rows(); ++i)
    nn[i] = tree.nearest(from.row(i).transpose()).index;
  return nn;
}

inline void require_nonempty(const Points2& a, const Points2& b) {
  if (a.rows() < 1 || b.rows() < 1) throw DataError("chamfer: empty cloud");
}

}  // namespace detail

// O(N*M) reference implementation; the oracle for chamfer_fast.
inline ChamferResult chamfer(const Points2& a, const Points2& b) {
  detail::require_nonempty(a, b);
  return detail::chamfer_from_assignments(a, b, detail::nn_brute(a, b), detail::nn_brute(b, a));
}

// Accelerated nearest neighbors via a kd-tree; identical value and gradients
// to chamfer, including index tie-breaks.
inline ChamferResult chamfer_fast(const Points2& a, const Points2& b) {
  detail::require_nonempty(a, b);
  const KdTree2D tree_b(b);
  const KdTree2D tree_a(a);
  return detail::chamfer_from_assignments(a, b, detail::nn_indexed(a, tree_b),
                                          detail::nn_indexed(b, tree_a));
}

inline ChamferResult chamfer(const PointCloud2D& a, const PointCloud2D& b) {
  return chamfer(a.points, b.points);
}
inline ChamferResult chamfer_fast(const PointCloud2D& a, const PointCloud2D& b) {
  return chamfer_fast(a.points, b.points);
}

// Mean squared pixel error over visible keypoints.
struct KeypointResult {
  double value = 0.0;
  Points2 grad_pred;
};

inline KeypointResult keypoint_loss(const Points2& pred, const Points2& gt,
                                    const std::vector<bool>& visibility) {
  if (pred.rows() != gt.rows() || static_cast<Eigen::Index>(visibility.size()) != pred.rows())
    throw DimensionError("keypoint_loss: keypoint counts disagree");
  int visible = 0;
  for (bool v : visibility) visible += v ? 1 : 0;
  if (visible == 0) throw DataError("keypoint_loss: no visible keypoints");

  KeypointResult res;
  res.grad_pred = Points2::Zero(pred.rows(), 2);
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    if (!visibility[static_cast<std::size_t>(i)]) continue;
    const double dx = pred(i, 0) - gt(i, 0);
    const double dy = pred(i, 1) - gt(i, 1);
    res.value += (dx * dx + dy * dy) / visible;
    res.grad_pred(i, 0) = 2.0 * dx / visible;
    res.grad_pred(i, 1) = 2.0 * dy / visible;
  }
  return res;
}

// Temporal shape consistency: sum_t |beta_t - beta_mean| (unsquared norm).
struct ConsistencyResult {
  double value = 0.0;
  MatX grad_betas;
};

inline ConsistencyResult shape_consistency(const MatX& betas) {
  const Eigen::Index t_count = betas.rows();
  if (t_count < 1) throw DataError("shape_consistency: need at least one frame");
  const VecX mean = betas.colwise().mean();

  ConsistencyResult res;
  res.grad_betas = MatX::Zero(t_count, betas.cols());
  MatX unit = MatX::Zero(t_count, betas.cols());
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const VecX r = betas.row(t).transpose() - mean;
    const double norm = r.norm();
    res.value += norm;
    if (norm > 0.0) unit.row(t) = r.transpose() / norm;  // subgradient 0 at the mean
  }
  const VecX unit_mean = unit.colwise().mean();
  for (Eigen::Index t = 0; t < t_count; ++t)
    res.grad_betas.row(t) = unit.row(t) - unit_mean.transpose();
  return res;
}

// Additive angular margin (arc-margin) classification loss.
struct ArcMarginConfig {
  double scale = 30.0;
  double margin = 0.5;  // radians
  int classes = 0;
  int embed_dim = 0;
};

struct ArcMarginResult {
  double value = 0.0;
  VecX grad_embedding;
  MatX grad_class_weights;
};

inline ArcMarginResult arc_margin_loss(const VecX& embedding, const MatX& class_weights,
                                       int label, const ArcMarginConfig& cfg) {
  if (cfg.scale <= 0.0) throw ConfigError("arc_margin_loss: scale must be positive");
  if (cfg.margin < 0.0 || cfg.margin >= kPi / 2.0)
    throw ConfigError("arc_margin_loss: margin must lie in [0, pi/2)");
  const Eigen::Index classes = class_weights.rows();
  if (label < 0 || label >= classes) throw ConfigError("arc_margin_loss: label out of range");
  if (class_weights.cols() != embedding.size())
    throw DimensionError("arc_margin_loss: embedding dim does not match class weights");

  const double x_norm = embedding.norm();
  if (x_norm <= 1e-12) throw DataError("arc_margin_loss: zero-norm embedding");
  const VecX x_hat = embedding / x_norm;

  VecX w_norms(classes), cosines(classes), logits(classes);
  MatX w_hat(classes, embedding.size());
  for (Eigen::Index j = 0; j < classes; ++j) {
    w_norms(j) = class_weights.row(j).norm();
    if (w_norms(j) <= 1e-12) throw DataError("arc_margin_loss: zero-norm class weight row");
    w_hat.row(j) = class_weights.row(j) / w_norms(j);
    cosines(j) = std::clamp(w_hat.row(j).dot(x_hat), -1.0, 1.0);
    logits(j) = cfg.scale * cosines(j);
  }
  const double theta = std::acos(cosines(label));
  const double theta_clamped = std::min(theta, kPi - cfg.margin);
  logits(label) = cfg.scale * std::cos(theta_clamped + cfg.margin);

  const double z_max = logits.maxCoeff();
  const double lse = z_max + std::log((logits.array() - z_max).exp().sum());
  ArcMarginResult res;
  res.value = lse - logits(label);

  VecX probs = (logits.array() - lse).exp();
  VecX d_cos = cfg.scale * probs;  // dL/dcos_j for non-target classes
  const double sin_theta = std::sin(theta);
  if (theta < kPi - cfg.margin && sin_theta > 1e-7) {
    d_cos(label) = (probs(label) - 1.0) * cfg.scale * std::sin(theta_clamped + cfg.margin) / sin_theta;
  } else if (sin_theta <= 1e-7) {
    d_cos(label) = (probs(label) - 1.0) * cfg.scale;  // aligned/opposed guard
  } else {
    d_cos(label) = 0.0;  // clamped: target logit locally constant
  }

  res.grad_embedding = VecX::Zero(embedding.size());
  res.grad_class_weights = MatX::Zero(classes, embedding.size());
  for (Eigen::Index j = 0; j < classes; ++j) {
    res.grad_embedding += d_cos(j) / x_norm * (w_hat.row(j).transpose() - cosines(j) * x_hat);
    res.grad_class_weights.row(j) =
        d_cos(j) / w_norms(j) * (x_hat.transpose() - cosines(j) * w_hat.row(j));
  }
  return res;
}

}  // namespace bodyid
