#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bodyid/body_model.hpp"
#include "bodyid/error.hpp"
#include "bodyid/fitter.hpp"
#include "bodyid/rng.hpp"
#include "bodyid/silhouette.hpp"

namespace bodyid {

struct PopulationConfig {
  int shape_dims = 10;
  double identity_sigma = 0.5;
  double identity_bound = 3.0;
  int clothing_variants = 2;
  double clothing_sigma = 0.05;
  // Components perturbed by clothing; by default the trailing half, the
  // model's radius-only block.
  std::vector<int> girth_components(int b_dim) const {
    std::vector<int> idx;
    for (int i = b_dim - b_dim / 2; i < b_dim; ++i) idx.push_back(i);
    return idx;
  }
};

struct Subject {
  int id = 0;
  VecX identity;                // latent beta*
  std::vector<VecX> clothing;   // identity + girth-only perturbations
};

struct Population {
  std::vector<Subject> subjects;
  std::uint64_t seed = 0;
  PopulationConfig config;
};

inline Population generate_population(int n_subjects, const PopulationConfig& config,
                                      std::uint64_t seed) {
  if (n_subjects < 2) throw ConfigError("generate_population: need at least two subjects");
  if (config.shape_dims < 1) throw ConfigError("generate_population: shape_dims must be >= 1");
  Rng rng(seed);
  Population pop;
  pop.seed = seed;
  pop.config = config;
  const auto girth = config.girth_components(config.shape_dims);
  for (int s = 0; s < n_subjects; ++s) {
    Subject subj;
    subj.id = s;
    subj.identity.resize(config.shape_dims);
    for (int i = 0; i < config.shape_dims; ++i)
      subj.identity(i) = rng.truncated_normal(0.0, config.identity_sigma,
                                              -config.identity_bound, config.identity_bound);
    for (int c = 0; c < config.clothing_variants; ++c) {
      VecX beta = subj.identity;
      for (int i : girth) beta(i) += rng.normal(0.0, config.clothing_sigma);
      subj.clothing.push_back(beta);
    }
    pop.subjects.push_back(std::move(subj));
  }
  return pop;
}

enum class YawKind { constant, sweep, random_walk };

struct YawTrajectory {
  YawKind kind = YawKind::constant;
  double start = 0.0;
  double end = 0.0;        // sweep target
  double step_sigma = 0.1; // random walk step
};

struct SequenceSpec {
  int subject = 0;
  int clothing = 0;
  int frame_count = 5;
  YawTrajectory yaw;
  double pitch = 0.0;            // radians
  double s = 224.0;              // simulated resolution in [48, 224]
  double sigma_kp = 0.0;         // keypoint pixel noise
  std::uint64_t seed = 0;
  int cloud_points = 400;
  double sigma0 = 0.5;           // degradation noise scale
  double pose_walk_sigma = 0.05; // per-frame joint walk step
  double pose_bound = 0.3;       // max joint perturbation magnitude
  int resolution = 224;
  double target_height_px = 160.0;

  void validate() const {
    if (frame_count < 1) throw ConfigError("sequence spec: frame_count must be >= 1");
    if (pitch < -kPi / 2.0 || pitch > kPi / 2.0)
      throw ConfigError("sequence spec: pitch must lie in [-pi/2, pi/2]");
    if (s < 48.0 || s > 224.0) throw ConfigError("sequence spec: s must lie in [48, 224]");
    if (cloud_points < 1) throw ConfigError("sequence spec: cloud_points must be >= 1");
    if (sigma_kp < 0.0) throw ConfigError("sequence spec: sigma_kp must be >= 0");
  }
};

struct GeneratedFrame {
  PointCloud2D cloud;
  Points2 keypoints;
  std::vector<bool> visibility;
  FrameFit ground_truth;
};

namespace detail {

inline std::vector<GeneratedFrame> generate_sequence_attempt(const BodyModel& model,
                                                             const VecX& beta,
                                                             const SequenceSpec& spec,
                                                             double scale_shrink) {
  Rng rng(spec.seed);
  const int joints = model.joint_count();
  const int keypoints = model.keypoint_count;
  ShapeParams shape{beta};

  // yaw per frame
  std::vector<double> yaws(spec.frame_count);
  switch (spec.yaw.kind) {
    case YawKind::constant:
      for (auto& y : yaws) y = spec.yaw.start;
      break;
    case YawKind::sweep:
      for (int f = 0; f < spec.frame_count; ++f)
        yaws[f] = spec.frame_count == 1
                      ? spec.yaw.start
                      : spec.yaw.start +
                            (spec.yaw.end - spec.yaw.start) * f / (spec.frame_count - 1);
      break;
    case YawKind::random_walk: {
      double y = rng.uniform(-kPi, kPi);
      for (int f = 0; f < spec.frame_count; ++f) {
        yaws[f] = wrap_angle(y);
        y += rng.normal(0.0, spec.yaw.step_sigma);
      }
      break;
    }
  }

  // bounded random walk of the non-root joints around the rest pose
  std::vector<PoseParams> poses(spec.frame_count, PoseParams::rest(joints));
  Eigen::Matrix<double, Eigen::Dynamic, 3> walk =
      Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(joints, 3);
  for (int f = 0; f < spec.frame_count; ++f) {
    for (int j = 1; j < joints; ++j) {
      for (int a = 0; a < 3; ++a) walk(j, a) += rng.normal(0.0, spec.pose_walk_sigma);
      const double mag = walk.row(j).norm();
      if (mag > spec.pose_bound) walk.row(j) *= spec.pose_bound / mag;
      poses[f].theta.row(j) = walk.row(j);
    }
    const Mat3 root = rot_y(yaws[f]) * rot_x(spec.pitch);
    poses[f].theta.row(0) = axis_angle_from_rotation(root).transpose();
  }

  // static camera framing the first posed body
  const LbsForward first = lbs_forward(model, shape, poses[0]);
  const double min_y = first.joint_positions.col(1).minCoeff();
  const double max_y = first.joint_positions.col(1).maxCoeff();
  const double min_x = first.joint_positions.col(0).minCoeff();
  const double max_x = first.joint_positions.col(0).maxCoeff();
  const double height = std::max(1e-6, max_y - min_y);
  Camera cam;
  cam.scale = scale_shrink * spec.target_height_px / height;
  const double half = spec.resolution / 2.0;
  cam.trans = Vec2(half - cam.scale * 0.5 * (min_x + max_x),
                   half - cam.scale * 0.5 * (min_y + max_y));

  std::vector<GeneratedFrame> frames(spec.frame_count);
  for (int f = 0; f < spec.frame_count; ++f) {
    GeneratedFrame& out = frames[f];
    const Mask mask = rasterize_mask(model, shape, poses[f], cam, spec.resolution);
    PointCloud2D cloud = sample_silhouette_cloud(mask, spec.cloud_points, rng.next_seed());
    out.cloud = degrade_cloud(cloud, spec.s, spec.sigma0, rng.next_seed());

    const LbsForward fwd = lbs_forward(model, shape, poses[f]);
    out.keypoints = project(cam, fwd.joint_positions.topRows(keypoints));
    if (spec.sigma_kp > 0.0)
      for (Eigen::Index i = 0; i < out.keypoints.rows(); ++i)
        for (int a = 0; a < 2; ++a) out.keypoints(i, a) += rng.normal(0.0, spec.sigma_kp);
    out.visibility.assign(static_cast<std::size_t>(keypoints), true);

    out.ground_truth.beta = shape;
    out.ground_truth.theta = poses[f];
    out.ground_truth.camera = cam;
    out.ground_truth.view = view_angles(poses[f]);
  }
  return frames;
}

}  // namespace detail

// Frames of (degraded silhouette cloud, noisy keypoints, ground truth).
// Reproducible bit for bit from (model, population, spec).
inline std::vector<GeneratedFrame> generate_sequence(const BodyModel& model,
                                                     const Population& population,
                                                     const SequenceSpec& spec) {
  spec.validate();
  if (spec.subject < 0 || spec.subject >= static_cast<int>(population.subjects.size()))
    throw ConfigError("generate_sequence: subject index out of range");
  const auto& subj = population.subjects[spec.subject];
  if (spec.clothing < 0 || spec.clothing >= static_cast<int>(subj.clothing.size()))
    throw ConfigError("generate_sequence: clothing variant out of range");
  const VecX& beta = subj.clothing[spec.clothing];
  if (beta.size() != model.shape_dim())
    throw DimensionError("generate_sequence: population shape dims do not match the model");
  try {
    return detail::generate_sequence_attempt(model, beta, spec, 1.0);
  } catch (const DataError&) {
    // body left the frame: shrink the camera once, then give up
    return detail::generate_sequence_attempt(model, beta, spec, 0.8);
  }
}

// FrameInput view of a generated frame (what the fitter consumes).
inline std::vector<FrameInput> to_frame_inputs(const std::vector<GeneratedFrame>& frames,
                                               int begin, int end) {
  std::vector<FrameInput> out;
  out.reserve(static_cast<std::size_t>(end - begin));
  for (int f = begin; f < end; ++f)
    out.push_back({frames[f].cloud, frames[f].keypoints, frames[f].visibility});
  return out;
}

inline std::vector<FrameInput> to_frame_inputs(const std::vector<GeneratedFrame>& frames) {
  return to_frame_inputs(frames, 0, static_cast<int>(frames.size()));
}

}  // namespace bodyid
