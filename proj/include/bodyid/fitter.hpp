#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "bodyid/adam.hpp"
#include "bodyid/body_model.hpp"
#include "bodyid/error.hpp"
#include "bodyid/losses.hpp"
#include "bodyid/silhouette.hpp"

namespace bodyid {

struct LossWeights {
  double chamfer = 1.0;
  double keypoint = 1.0;
  double consistency = 0.1;
};

struct FitConfig {
  int seq_len = 5;
  int max_iters = 300;
  double lr_beta = 0.01;
  double lr_theta = 0.01;
  double lr_cam_scale = 0.1;
  double lr_cam_trans = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double rel_tol = 1e-6;  // relative total-loss change over tol_window iters
  int tol_window = 10;
  int trend_window = 20;  // loss may never exceed its value this many iters back
  LossWeights weights;
  int grid = 16;
  int k_per_cell = 2;
  double beta_clamp = 5.0;
  double nominal_height = 1.7;  // meters, for camera initialization

  void validate() const {
    if (seq_len < 1) throw ConfigError("fit: seq_len must be >= 1");
    if (max_iters < 1) throw ConfigError("fit: max_iters must be >= 1");
    if (rel_tol <= 0.0) throw ConfigError("fit: rel_tol must be positive");
    if (grid < 1 || k_per_cell < 1) throw ConfigError("fit: sampling grid params must be >= 1");
    if (lr_beta < 0 || lr_theta < 0 || lr_cam_scale < 0 || lr_cam_trans < 0)
      throw ConfigError("fit: step sizes must be non-negative");
  }
};

// One observed frame: silhouette sample cloud plus 2D keypoints.
struct FrameInput {
  PointCloud2D cloud;
  Points2 keypoints;
  std::vector<bool> visibility;
};

struct FrameLosses {
  double chamfer = 0.0;
  double keypoint = 0.0;
};

struct FrameFit {
  ShapeParams beta;
  PoseParams theta;
  Camera camera;
  ViewAngles view;
  FrameLosses losses;
};

struct SubsequenceFit {
  std::vector<FrameFit> frames;
  VecX feature;  // mean beta over frames
  ViewAngles median_view;
  double total_loss = 0.0;
  double consistency_loss = 0.0;
  int iterations = 0;
  int step_reductions = 0;
  std::vector<double> loss_history;
};

// scale = keypoint bbox height / nominal body height; trans = bbox center.
inline Camera init_camera(const Points2& keypoints, double nominal_height = 1.7) {
  if (keypoints.rows() < 1) throw DataError("init_camera: no keypoints");
  const double min_x = keypoints.col(0).minCoeff(), max_x = keypoints.col(0).maxCoeff();
  const double min_y = keypoints.col(1).minCoeff(), max_y = keypoints.col(1).maxCoeff();
  const double height = max_y - min_y;
  if (height < 1.0) throw DataError("init_camera: degenerate keypoint bounding box");
  Camera cam;
  cam.scale = height / nominal_height;
  cam.trans = Vec2(0.5 * (min_x + max_x), 0.5 * (min_y + max_y));
  return cam;
}

// Consecutive non-overlapping windows of length seq_len; a trailing window
// shorter than ceil(seq_len/2) merges into its predecessor.
inline std::vector<std::pair<int, int>> split_sequence(int frame_count, int seq_len) {
  if (frame_count < 1) throw DataError("split_sequence: empty sequence");
  if (seq_len < 1) throw ConfigError("split_sequence: seq_len must be >= 1");
  std::vector<std::pair<int, int>> windows;
  for (int start = 0; start < frame_count; start += seq_len)
    windows.emplace_back(start, std::min(start + seq_len, frame_count));
  if (windows.size() >= 2) {
    const auto last = windows.back();
    if (last.second - last.first < (seq_len + 1) / 2) {
      windows.pop_back();
      windows.back().second = last.second;
    }
  }
  return windows;
}

namespace detail {

// Rest pose with the root yaw chosen from the projected shoulder order,
// which resolves the front/back ambiguity before optimization starts.
inline PoseParams init_pose(const BodyModel& model, const Points2& keypoints) {
  PoseParams pose = PoseParams::rest(model.joint_count());
  constexpr int kLeftShoulder = 11, kRightShoulder = 14;
  if (model.joint_count() == 17 && keypoints.rows() > kRightShoulder) {
    const double dx = keypoints(kLeftShoulder, 0) - keypoints(kRightShoulder, 0);
    if (dx < 0.0) pose.theta.row(0) = Vec3(0.0, kPi, 0.0).transpose();
  }
  return pose;
}

inline std::uint64_t fnv1a(std::uint64_t h, std::uint64_t x) {
  for (int k = 0; k < 8; ++k) {
    h ^= (x >> (8 * k)) & 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

// Composite fitting objective and its analytic gradients for one
// subsequence. selection_signature fingerprints the adaptive-sampling and
// nearest-neighbor assignments, which identify the smooth region the
// gradients are valid on.
struct CompositeEval {
  double total = 0.0;
  double chamfer = 0.0;
  double keypoint = 0.0;
  double consistency = 0.0;
  std::vector<FrameLosses> frame_losses;
  MatX d_betas;                                              // T x B
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>> d_thetas;  // per frame, J x 3
  VecX d_scales;                                             // T
  Points2 d_trans;                                           // T x 2
  std::uint64_t selection_signature = 1469598103934665603ull;
};

inline CompositeEval evaluate_objective(const BodyModel& model,
                                        const std::vector<FrameInput>& frames,
                                        const MatX& betas, const std::vector<PoseParams>& poses,
                                        const std::vector<Camera>& cams, const FitConfig& cfg) {
  const int t_count = static_cast<int>(frames.size());
  const int keypoints = model.keypoint_count;
  CompositeEval ev;
  ev.frame_losses.resize(t_count);
  ev.d_betas = MatX::Zero(t_count, model.shape_dim());
  ev.d_thetas.resize(t_count);
  ev.d_scales = VecX::Zero(t_count);
  ev.d_trans = Points2::Zero(t_count, 2);

  for (int t = 0; t < t_count; ++t) {
    ShapeParams shape{betas.row(t).transpose()};
    const LbsForward fwd = lbs_forward(model, shape, poses[t]);
    const Points2 proj_verts = project(cams[t], fwd.vertices);
    const Points3 kp_joints = fwd.joint_positions.topRows(keypoints);
    const Points2 proj_joints = project(cams[t], kp_joints);

    const std::vector<int> kept = adaptive_sample_indices(proj_verts, cfg.grid, cfg.k_per_cell);
    Points2 model_cloud(static_cast<Eigen::Index>(kept.size()), 2);
    for (std::size_t i = 0; i < kept.size(); ++i)
      model_cloud.row(static_cast<Eigen::Index>(i)) = proj_verts.row(kept[i]);

    const ChamferResult ch = chamfer_fast(model_cloud, frames[t].cloud.points);
    const KeypointResult kp =
        keypoint_loss(proj_joints, frames[t].keypoints, frames[t].visibility);

    ev.frame_losses[t] = {ch.value, kp.value};
    ev.chamfer += ch.value;
    ev.keypoint += kp.value;

    for (int idx : kept) ev.selection_signature = detail::fnv1a(ev.selection_signature, idx);
    for (int idx : ch.nn_ab) ev.selection_signature = detail::fnv1a(ev.selection_signature, idx);
    for (int idx : ch.nn_ba) ev.selection_signature = detail::fnv1a(ev.selection_signature, idx);

    // pull pixel gradients back through the projection
    Points2 d_proj_verts = Points2::Zero(proj_verts.rows(), 2);
    for (std::size_t i = 0; i < kept.size(); ++i)
      d_proj_verts.row(kept[i]) =
          cfg.weights.chamfer * ch.grad_a.row(static_cast<Eigen::Index>(i));
    const Points2 d_proj_joints = cfg.weights.keypoint * kp.grad_pred;

    Points3 d_verts3 = Points3::Zero(fwd.vertices.rows(), 3);
    d_verts3.col(0) = cams[t].scale * d_proj_verts.col(0);
    d_verts3.col(1) = cams[t].scale * d_proj_verts.col(1);
    Points3 d_joints3 = Points3::Zero(fwd.joint_positions.rows(), 3);
    d_joints3.topRows(keypoints).col(0) = cams[t].scale * d_proj_joints.col(0);
    d_joints3.topRows(keypoints).col(1) = cams[t].scale * d_proj_joints.col(1);

    ev.d_scales(t) = (d_proj_verts.col(0).array() * fwd.vertices.col(0).array()).sum() +
                     (d_proj_verts.col(1).array() * fwd.vertices.col(1).array()).sum() +
                     (d_proj_joints.col(0).array() * kp_joints.col(0).array()).sum() +
                     (d_proj_joints.col(1).array() * kp_joints.col(1).array()).sum();
    ev.d_trans.row(t) = d_proj_verts.colwise().sum() + d_proj_joints.colwise().sum();

    const LbsGradients lg = lbs_backward(model, shape, poses[t], fwd, d_verts3, d_joints3);
    ev.d_betas.row(t) += lg.d_beta.transpose();
    ev.d_thetas[t] = lg.d_theta;
  }

  const ConsistencyResult sc = shape_consistency(betas);
  ev.consistency = sc.value;
  ev.d_betas += cfg.weights.consistency * sc.grad_betas;

  ev.total = cfg.weights.chamfer * ev.chamfer + cfg.weights.keypoint * ev.keypoint +
             cfg.weights.consistency * ev.consistency;
  return ev;
}

// Gradient-based recovery of per-frame (beta, theta, camera) from silhouette
// clouds and keypoints. Deterministic: the result depends only on the model,
// the inputs, and the config. The recorded loss curve never rises across a
// trend_window span; when a step would violate that, the fit backtracks to
// its best iterate and halves the step sizes.
inline SubsequenceFit fit_subsequence(const BodyModel& model,
                                      const std::vector<FrameInput>& frames,
                                      const FitConfig& cfg, std::uint64_t seed = 0) {
  (void)seed;  // reserved; the fit itself draws no randomness
  cfg.validate();
  if (frames.empty()) throw DataError("fit_subsequence: no frames");
  const int t_count = static_cast<int>(frames.size());
  const int b_dim = model.shape_dim();
  const int joints = model.joint_count();
  for (const auto& fr : frames) {
    if (fr.cloud.size() < 1) throw DataError("fit_subsequence: empty silhouette cloud");
    if (fr.keypoints.rows() != model.keypoint_count)
      throw DimensionError("fit_subsequence: keypoint count does not match the model");
    bool any = false;
    for (bool v : fr.visibility) any = any || v;
    if (!any) throw DataError("fit_subsequence: frame has no visible keypoints");
  }

  MatX betas = MatX::Zero(t_count, b_dim);
  std::vector<PoseParams> poses;
  std::vector<Camera> cams;
  poses.reserve(t_count);
  cams.reserve(t_count);
  for (const auto& fr : frames) {
    poses.push_back(detail::init_pose(model, fr.keypoints));
    cams.push_back(init_camera(fr.keypoints, cfg.nominal_height));
  }

  Adam adam_beta{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  Adam adam_theta{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  Adam adam_scale{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  Adam adam_trans{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  adam_beta.init(static_cast<Eigen::Index>(t_count) * b_dim);
  adam_theta.init(static_cast<Eigen::Index>(t_count) * joints * 3);
  adam_scale.init(t_count);
  adam_trans.init(static_cast<Eigen::Index>(t_count) * 2);

  double lr_beta = cfg.lr_beta, lr_theta = cfg.lr_theta;
  double lr_scale = cfg.lr_cam_scale, lr_trans = cfg.lr_cam_trans;

  struct Snapshot {
    MatX betas;
    std::vector<PoseParams> poses;
    std::vector<Camera> cams;
    std::vector<FrameLosses> frame_losses;
    double total = std::numeric_limits<double>::infinity();
    double consistency = 0.0;
  } best;

  std::vector<double> history;
  history.reserve(cfg.max_iters);
  int reductions = 0;
  int iterations = 0;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    iterations = iter;
    CompositeEval ev = evaluate_objective(model, frames, betas, poses, cams, cfg);
    if (!std::isfinite(ev.total))
      throw DivergenceError("fit_subsequence: non-finite loss at iteration " +
                            std::to_string(iter));

    if (ev.total < best.total)
      best = {betas, poses, cams, ev.frame_losses, ev.total, ev.consistency};

    const std::size_t n = history.size();
    if (n >= static_cast<std::size_t>(cfg.trend_window) &&
        ev.total > history[n - cfg.trend_window]) {
      // trend violation: back to the best iterate with smaller steps
      betas = best.betas;
      poses = best.poses;
      cams = best.cams;
      lr_beta *= 0.5;
      lr_theta *= 0.5;
      lr_scale *= 0.5;
      lr_trans *= 0.5;
      adam_beta.reset();
      adam_theta.reset();
      adam_scale.reset();
      adam_trans.reset();
      ++reductions;
      history.push_back(best.total);
      continue;
    }
    history.push_back(ev.total);

    if (history.size() > static_cast<std::size_t>(cfg.tol_window)) {
      const double prev = history[history.size() - 1 - cfg.tol_window];
      if (std::abs(ev.total - prev) / std::max(std::abs(prev), 1e-12) < cfg.rel_tol) break;
    }
    if (iter == cfg.max_iters) break;

    // flatten, step, unflatten
    VecX beta_flat(static_cast<Eigen::Index>(t_count) * b_dim);
    VecX beta_grad(beta_flat.size());
    VecX theta_flat(static_cast<Eigen::Index>(t_count) * joints * 3);
    VecX theta_grad(theta_flat.size());
    VecX scale_flat(t_count), scale_grad(t_count);
    VecX trans_flat(static_cast<Eigen::Index>(t_count) * 2), trans_grad(trans_flat.size());
    for (int t = 0; t < t_count; ++t) {
      beta_flat.segment(static_cast<Eigen::Index>(t) * b_dim, b_dim) = betas.row(t);
      beta_grad.segment(static_cast<Eigen::Index>(t) * b_dim, b_dim) = ev.d_betas.row(t);
      for (int j = 0; j < joints; ++j)
        for (int a = 0; a < 3; ++a) {
          theta_flat(static_cast<Eigen::Index>(t) * joints * 3 + j * 3 + a) =
              poses[t].theta(j, a);
          theta_grad(static_cast<Eigen::Index>(t) * joints * 3 + j * 3 + a) =
              ev.d_thetas[t](j, a);
        }
      scale_flat(t) = cams[t].scale;
      scale_grad(t) = ev.d_scales(t);
      trans_flat.segment(static_cast<Eigen::Index>(t) * 2, 2) = cams[t].trans;
      trans_grad.segment(static_cast<Eigen::Index>(t) * 2, 2) = ev.d_trans.row(t);
    }
    adam_beta.step(beta_flat, beta_grad, lr_beta);
    adam_theta.step(theta_flat, theta_grad, lr_theta);
    adam_scale.step(scale_flat, scale_grad, lr_scale);
    adam_trans.step(trans_flat, trans_grad, lr_trans);
    for (int t = 0; t < t_count; ++t) {
      betas.row(t) = beta_flat.segment(static_cast<Eigen::Index>(t) * b_dim, b_dim)
                         .cwiseMax(-cfg.beta_clamp)
                         .cwiseMin(cfg.beta_clamp);
      for (int j = 0; j < joints; ++j)
        for (int a = 0; a < 3; ++a)
          poses[t].theta(j, a) = theta_flat(static_cast<Eigen::Index>(t) * joints * 3 + j * 3 + a);
      cams[t].scale = std::max(1e-3, scale_flat(t));
      cams[t].trans = trans_flat.segment(static_cast<Eigen::Index>(t) * 2, 2);
    }
  }

  SubsequenceFit out;
  out.iterations = iterations;
  out.step_reductions = reductions;
  out.loss_history = std::move(history);
  out.total_loss = best.total;
  out.consistency_loss = best.consistency;
  out.frames.resize(t_count);
  for (int t = 0; t < t_count; ++t) {
    FrameFit& ff = out.frames[t];
    ff.beta.beta = best.betas.row(t).transpose();
    ff.theta = best.poses[t];
    ff.theta.canonicalize();
    ff.camera = best.cams[t];
    ff.view = view_angles(ff.theta);
    ff.losses = best.frame_losses[t];
  }
  out.feature = best.betas.colwise().mean().transpose();

  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  std::vector<double> yaws, pitches, rolls;
  for (const auto& ff : out.frames) {
    yaws.push_back(ff.view.yaw);
    pitches.push_back(ff.view.pitch);
    rolls.push_back(ff.view.roll);
  }
  out.median_view.yaw = median_of(yaws);
  out.median_view.pitch = median_of(pitches);
  out.median_view.roll = median_of(rolls);
  return out;
}

}  // namespace bodyid
