#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bodyid/error.hpp"
#include "bodyid/geometry.hpp"
#include "bodyid/rng.hpp"

namespace bodyid {

// Joint-parent table. Joint 0 is the root (its parent is itself); bone b
// connects joint parents[b+1] to joint b+1, so a tree with J joints has
// J-1 bones.
struct KinematicTree {
  std::vector<int> parents;
  Points3 rest_dirs;  // one unit vector per bone

  int joint_count() const { return static_cast<int>(parents.size()); }
  int bone_count() const { return joint_count() - 1; }
  int bone_start_joint(int bone) const { return parents[bone + 1]; }
  int bone_end_joint(int bone) const { return bone + 1; }
};

struct ShapeParams {
  VecX beta;
};

// Per-joint axis-angle rotations, row j = rotation at joint j. Row 0 is the
// global (root) orientation.
struct PoseParams {
  Eigen::Matrix<double, Eigen::Dynamic, 3> theta;

  static PoseParams rest(int joints) {
    PoseParams p;
    p.theta = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(joints, 3);
    return p;
  }

  // Wrap rotations with magnitude > pi onto the equivalent short arc.
  void canonicalize() {
    for (Eigen::Index j = 0; j < theta.rows(); ++j) {
      const double angle = theta.row(j).norm();
      if (angle > kPi) {
        const double wrapped = wrap_angle(angle);
        theta.row(j) *= wrapped / angle;
      }
    }
  }
};

// Weak-perspective camera: pixels = scale * (x, y) + trans.
struct Camera {
  double scale = 1.0;
  Vec2 trans = Vec2::Zero();
};

struct ViewAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  bool gimbal_locked = false;
};

struct BoneAttributes {
  VecX lengths;
  VecX radii;
};

struct ModelConfig {
  int vertices = 512;
  int joints = 17;
  int shape_dims = 10;
  double basis_scale = 0.15;   // column norm of the shape basis (log scale)
  double dir_noise = 0.05;     // rest-direction perturbation
  double attr_noise = 0.03;    // log-scale length/radius perturbation
};

// Procedurally generated capsule body. Vertices live on the capsule surface
// of one bone each, parameterized by (bone, axial fraction u, unit offset m),
// so the rest position for any beta is
//   start_joint(beta) + u * length(beta) * dir + radius(beta) * m.
// Shape parameters act multiplicatively on bone lengths and radii through
// exp(shape_basis * beta). Rows 0..bones-1 of the basis are log-length
// offsets, rows bones..2*bones-1 log-radius offsets.
struct BodyModel {
  KinematicTree tree;
  VecX base_lengths;
  VecX base_radii;
  MatX shape_basis;  // (2*bones) x B
  Points3 template_vertices;
  MatX skin_weights;  // V x J, row-stochastic
  std::vector<int> vertex_bone;
  VecX vertex_u;
  Points3 vertex_offset;
  int keypoint_count = 17;
  std::uint64_t seed = 0;
  ModelConfig config;

  int vertex_count() const { return static_cast<int>(template_vertices.rows()); }
  int joint_count() const { return tree.joint_count(); }
  int bone_count() const { return tree.bone_count(); }
  int shape_dim() const { return static_cast<int>(shape_basis.cols()); }
};

namespace detail {

struct JointSpec {
  int parent;
  Vec3 dir;
  double length;
  double radius;
};

// 17-joint human layout: +y up, +x subject-left, z toward the viewer.
inline std::vector<JointSpec> human_topology() {
  const double s = 0.5547001962252291, c = 0.8320502943378437;  // normalize(2,-3)
  std::vector<JointSpec> t;
  t.push_back({0, Vec3::Zero(), 0.0, 0.0});                            // 0 pelvis
  t.push_back({0, Vec3(0, 1, 0), 0.22, 0.11});                         // 1 spine
  t.push_back({1, Vec3(0, 1, 0), 0.22, 0.12});                         // 2 chest
  t.push_back({2, Vec3(0, 1, 0), 0.12, 0.05});                         // 3 neck
  t.push_back({3, Vec3(0, 1, 0), 0.20, 0.09});                         // 4 head
  t.push_back({0, Vec3(s, -c, 0), 0.12, 0.07});                        // 5 l_hip
  t.push_back({5, Vec3(0, -1, 0), 0.42, 0.07});                        // 6 l_knee
  t.push_back({6, Vec3(0, -1, 0), 0.42, 0.05});                        // 7 l_ankle
  t.push_back({0, Vec3(-s, -c, 0), 0.12, 0.07});                       // 8 r_hip
  t.push_back({8, Vec3(0, -1, 0), 0.42, 0.07});                        // 9 r_knee
  t.push_back({9, Vec3(0, -1, 0), 0.42, 0.05});                        // 10 r_ankle
  t.push_back({2, Vec3(0.9325, 0.3612, 0).normalized(), 0.18, 0.06});  // 11 l_shoulder
  t.push_back({11, Vec3(0.9889, -0.1483, 0).normalized(), 0.28, 0.045});  // 12 l_elbow
  t.push_back({12, Vec3(0.9950, -0.0995, 0).normalized(), 0.25, 0.04});   // 13 l_wrist
  t.push_back({2, Vec3(-0.9325, 0.3612, 0).normalized(), 0.18, 0.06});    // 14 r_shoulder
  t.push_back({14, Vec3(-0.9889, -0.1483, 0).normalized(), 0.28, 0.045}); // 15 r_elbow
  t.push_back({15, Vec3(-0.9950, -0.0995, 0).normalized(), 0.25, 0.04});  // 16 r_wrist
  return t;
}

inline void orthonormal_frame(const Vec3& d, Vec3& e1, Vec3& e2) {
  const Vec3 a = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  e1 = d.cross(a).normalized();
  e2 = d.cross(e1);
}

}  // namespace detail

// Per-bone (length, radius) for the given shape coefficients.
inline BoneAttributes bone_attributes(const BodyModel& model, const ShapeParams& shape) {
  if (shape.beta.size() != model.shape_dim())
    throw DimensionError("bone_attributes: beta has " + std::to_string(shape.beta.size()) +
                         " coefficients, model expects " + std::to_string(model.shape_dim()));
  const int bones = model.bone_count();
  const VecX offsets = model.shape_basis * shape.beta;
  BoneAttributes attrs;
  attrs.lengths = model.base_lengths.array() * offsets.head(bones).array().exp();
  attrs.radii = model.base_radii.array() * offsets.tail(bones).array().exp();
  return attrs;
}

// Rest-pose joint positions. Root at the origin; each child joint sits at
// parent + length * rest_dir.
inline Points3 regress_joints(const BodyModel& model, const BoneAttributes& attrs) {
  const int joints = model.joint_count();
  Points3 out(joints, 3);
  out.row(0).setZero();
  for (int j = 1; j < joints; ++j) {
    const int bone = j - 1;
    out.row(j) = out.row(model.tree.parents[j]) +
                 attrs.lengths(bone) * model.tree.rest_dirs.row(bone);
  }
  return out;
}

inline Points3 regress_joints(const BodyModel& model, const ShapeParams& shape) {
  return regress_joints(model, bone_attributes(model, shape));
}

// Shaped (but unposed) vertex positions from the capsule parameterization.
inline Points3 rest_vertices(const BodyModel& model, const BoneAttributes& attrs,
                             const Points3& rest_joints) {
  const int n = model.vertex_count();
  Points3 out(n, 3);
  for (int i = 0; i < n; ++i) {
    const int bone = model.vertex_bone[i];
    const int start = model.tree.bone_start_joint(bone);
    out.row(i) = rest_joints.row(start) +
                 model.vertex_u(i) * attrs.lengths(bone) * model.tree.rest_dirs.row(bone) +
                 attrs.radii(bone) * model.vertex_offset.row(i);
  }
  return out;
}

// Forward pass of posing: shaping, forward kinematics, and linear blend
// skinning, with every intermediate kept for the reverse pass.
struct LbsForward {
  BoneAttributes attrs;
  Points3 rest_joints;
  Points3 rest_verts;
  std::vector<Mat3> rot_local;
  std::vector<Mat3> rot_global;
  Points3 joint_positions;  // posed joints
  Points3 vertices;         // posed vertices
};

inline LbsForward lbs_forward(const BodyModel& model, const ShapeParams& shape,
                              const PoseParams& pose) {
  const int joints = model.joint_count();
  if (pose.theta.rows() != joints)
    throw DimensionError("lbs: pose has " + std::to_string(pose.theta.rows()) +
                         " joints, model expects " + std::to_string(joints));
  LbsForward f;
  f.attrs = bone_attributes(model, shape);
  f.rest_joints = regress_joints(model, f.attrs);
  f.rest_verts = rest_vertices(model, f.attrs, f.rest_joints);

  f.rot_local.resize(joints);
  f.rot_global.resize(joints);
  f.joint_positions.resize(joints, 3);
  for (int j = 0; j < joints; ++j) f.rot_local[j] = rotation_from_axis_angle(pose.theta.row(j));
  f.rot_global[0] = f.rot_local[0];
  f.joint_positions.row(0) = f.rest_joints.row(0);
  for (int j = 1; j < joints; ++j) {
    const int par = model.tree.parents[j];
    f.rot_global[j] = f.rot_global[par] * f.rot_local[j];
    const Vec3 delta = (f.rest_joints.row(j) - f.rest_joints.row(par)).transpose();
    f.joint_positions.row(j) =
        f.joint_positions.row(par) + (f.rot_global[par] * delta).transpose();
  }

  // per-joint affine: x -> R_j x + t_j with t_j = p_j - R_j * rest_j
  std::vector<Vec3> t(joints);
  for (int j = 0; j < joints; ++j)
    t[j] = f.joint_positions.row(j).transpose() -
           f.rot_global[j] * f.rest_joints.row(j).transpose();

  const int n = model.vertex_count();
  f.vertices.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    const Vec3 x = f.rest_verts.row(i).transpose();
    Vec3 v = Vec3::Zero();
    for (int j = 0; j < joints; ++j) {
      const double w = model.skin_weights(i, j);
      if (w == 0.0) continue;
      v += w * (f.rot_global[j] * x + t[j]);
    }
    f.vertices.row(i) = v;
  }
  return f;
}

// Posed vertices only.
inline Points3 lbs(const BodyModel& model, const ShapeParams& shape, const PoseParams& pose) {
  return lbs_forward(model, shape, pose).vertices;
}

struct LbsGradients {
  VecX d_beta;
  Eigen::Matrix<double, Eigen::Dynamic, 3> d_theta;
};

// Reverse pass: pull gradients w.r.t. posed vertices and posed joints back
// to (beta, theta). d_vertices may be empty (no vertex term), same for
// d_joints.
inline LbsGradients lbs_backward(const BodyModel& model, const ShapeParams& shape,
                                 const PoseParams& pose, const LbsForward& f,
                                 const Points3& d_vertices, const Points3& d_joints) {
  const int joints = model.joint_count();
  const int bones = model.bone_count();
  const int n = model.vertex_count();

  std::vector<Mat3> d_rot_global(joints, Mat3::Zero());
  std::vector<Vec3> d_pos_global(joints, Vec3::Zero());
  std::vector<Vec3> d_t(joints, Vec3::Zero());
  Points3 d_rest_verts = Points3::Zero(n, 3);
  Points3 d_rest_joints = Points3::Zero(joints, 3);
  VecX d_len = VecX::Zero(bones);
  VecX d_rad = VecX::Zero(bones);

  // vertices -> per-joint transforms and rest vertices
  if (d_vertices.size() != 0) {
    for (int i = 0; i < n; ++i) {
      const Vec3 g = d_vertices.row(i).transpose();
      if (g.isZero(0.0)) continue;
      const Vec3 x = f.rest_verts.row(i).transpose();
      Vec3 dx = Vec3::Zero();
      for (int j = 0; j < joints; ++j) {
        const double w = model.skin_weights(i, j);
        if (w == 0.0) continue;
        d_rot_global[j].noalias() += (w * g) * x.transpose();
        d_t[j] += w * g;
        dx.noalias() += w * (f.rot_global[j].transpose() * g);
      }
      d_rest_verts.row(i) = dx;
    }
  }
  if (d_joints.size() != 0)
    for (int j = 0; j < joints; ++j) d_pos_global[j] += d_joints.row(j).transpose();

  // t_j = p_j - R_j * rest_j
  for (int j = 0; j < joints; ++j) {
    if (d_t[j].isZero(0.0)) continue;
    d_pos_global[j] += d_t[j];
    d_rot_global[j].noalias() -= d_t[j] * f.rest_joints.row(j);
    d_rest_joints.row(j) -= (f.rot_global[j].transpose() * d_t[j]).transpose();
  }

  // reverse kinematic chain (parents always precede children by index)
  std::vector<Mat3> d_rot_local(joints);
  for (int j = joints - 1; j >= 1; --j) {
    const int par = model.tree.parents[j];
    const Vec3 delta = (f.rest_joints.row(j) - f.rest_joints.row(par)).transpose();
    d_rot_global[par].noalias() += d_rot_global[j] * f.rot_local[j].transpose();
    d_rot_global[par].noalias() += d_pos_global[j] * delta.transpose();
    d_pos_global[par] += d_pos_global[j];
    d_rot_local[j] = f.rot_global[par].transpose() * d_rot_global[j];
    const Vec3 d_delta = f.rot_global[par].transpose() * d_pos_global[j];
    d_rest_joints.row(j) += d_delta.transpose();
    d_rest_joints.row(par) -= d_delta.transpose();
  }
  d_rot_local[0] = d_rot_global[0];
  // root joint position is pinned at the origin: no shape dependence

  LbsGradients out;
  out.d_theta.resize(joints, 3);
  for (int j = 0; j < joints; ++j) {
    Mat3 jac[3];
    rotation_jacobian(pose.theta.row(j), f.rot_local[j], jac);
    for (int a = 0; a < 3; ++a)
      out.d_theta(j, a) = (d_rot_local[j].array() * jac[a].array()).sum();
  }

  // rest vertices -> joints and attributes
  for (int i = 0; i < n; ++i) {
    const Vec3 dx = d_rest_verts.row(i).transpose();
    if (dx.isZero(0.0)) continue;
    const int bone = model.vertex_bone[i];
    const int start = model.tree.bone_start_joint(bone);
    d_rest_joints.row(start) += dx.transpose();
    d_len(bone) += model.vertex_u(i) * model.tree.rest_dirs.row(bone).dot(dx);
    d_rad(bone) += model.vertex_offset.row(i).dot(dx);
  }

  // rest joints -> bone lengths (child joints before parents)
  for (int j = joints - 1; j >= 1; --j) {
    const int par = model.tree.parents[j];
    const int bone = j - 1;
    d_rest_joints.row(par) += d_rest_joints.row(j);
    d_len(bone) += model.tree.rest_dirs.row(bone).dot(d_rest_joints.row(j));
  }

  // attributes -> beta through the exponential map
  out.d_beta = VecX::Zero(model.shape_dim());
  for (int b = 0; b < bones; ++b) {
    if (d_len(b) != 0.0)
      out.d_beta += d_len(b) * f.attrs.lengths(b) * model.shape_basis.row(b).transpose();
    if (d_rad(b) != 0.0)
      out.d_beta += d_rad(b) * f.attrs.radii(b) * model.shape_basis.row(bones + b).transpose();
  }
  return out;
}

// Weak-perspective projection; z is dropped.
inline Points2 project(const Camera& camera, const Points3& points) {
  if (camera.scale <= 0.0) throw ConfigError("project: camera scale must be positive");
  Points2 out(points.rows(), 2);
  out.col(0) = camera.scale * points.col(0).array() + camera.trans.x();
  out.col(1) = camera.scale * points.col(1).array() + camera.trans.y();
  return out;
}

// Decompose the root rotation as R = R_yaw(y) * R_pitch(x) * R_roll(z).
inline ViewAngles view_angles_from_rotation(const Mat3& r) {
  ViewAngles v;
  const double sp = std::clamp(-r(1, 2), -1.0, 1.0);
  v.pitch = std::asin(sp);
  if (kPi / 2.0 - std::abs(v.pitch) < 1e-9) {
    v.gimbal_locked = true;
    v.roll = 0.0;
    v.yaw = v.pitch > 0 ? std::atan2(r(0, 1), r(0, 0)) : std::atan2(-r(0, 1), r(0, 0));
  } else {
    v.yaw = std::atan2(r(0, 2), r(2, 2));
    v.roll = std::atan2(r(1, 0), r(1, 1));
  }
  v.yaw = wrap_angle(v.yaw);
  v.pitch = wrap_angle(v.pitch);
  v.roll = wrap_angle(v.roll);
  return v;
}

inline ViewAngles view_angles(const PoseParams& pose) {
  return view_angles_from_rotation(rotation_from_axis_angle(pose.theta.row(0)));
}

inline Mat3 rotation_from_view(const ViewAngles& v) {
  return rot_y(v.yaw) * rot_x(v.pitch) * rot_z(v.roll);
}

// Deterministic procedural body. The same seed and config always produce the
// same model, bit for bit.
inline BodyModel synthesize_model(std::uint64_t seed, const ModelConfig& config = {}) {
  if (config.vertices <= 0 || config.joints <= 0 || config.shape_dims <= 0)
    throw ConfigError("synthesize_model: vertex, joint and shape dims must be positive");
  if (config.joints != 17)
    throw ConfigError("synthesize_model: the procedural topology is defined for 17 joints");
  const int bones = config.joints - 1;
  if (config.vertices < 4 * bones)
    throw ConfigError("synthesize_model: need at least 4 vertices per bone");

  Rng rng(seed);
  auto topo = detail::human_topology();

  BodyModel m;
  m.seed = seed;
  m.config = config;
  m.keypoint_count = config.joints;
  m.tree.parents.resize(config.joints);
  m.tree.parents[0] = 0;
  m.tree.rest_dirs.resize(bones, 3);
  m.base_lengths.resize(bones);
  m.base_radii.resize(bones);
  for (int j = 1; j < config.joints; ++j) {
    m.tree.parents[j] = topo[j].parent;
    Vec3 dir = topo[j].dir;
    for (int a = 0; a < 3; ++a) dir(a) += rng.normal(0.0, config.dir_noise);
    m.tree.rest_dirs.row(j - 1) = dir.normalized();
    m.base_lengths(j - 1) = topo[j].length * std::exp(rng.normal(0.0, config.attr_noise));
    m.base_radii(j - 1) = topo[j].radius * std::exp(rng.normal(0.0, config.attr_noise));
  }

  // Shape basis with a girth block: the trailing floor(B/2) columns act on
  // radii only, the leading columns on lengths and radii. Columns are
  // orthonormalized (girth block first so its length rows stay zero) and
  // scaled to a common norm.
  const int b_dim = config.shape_dims;
  const int girth_dims = b_dim / 2;
  const int skel_dims = b_dim - girth_dims;
  m.shape_basis = MatX::Zero(2 * bones, b_dim);
  for (int c = 0; c < skel_dims; ++c)
    for (int r = 0; r < 2 * bones; ++r) m.shape_basis(r, c) = rng.normal(0.0, 1.0);
  for (int c = skel_dims; c < b_dim; ++c)
    for (int r = bones; r < 2 * bones; ++r) m.shape_basis(r, c) = rng.normal(0.0, 1.0);
  auto orthonormalize = [&](int col, int first_prev, int n_prev) {
    VecX v = m.shape_basis.col(col);
    for (int k = 0; k < n_prev; ++k) {
      const VecX u = m.shape_basis.col(first_prev + k);
      v -= u.dot(v) * u;
    }
    const double norm = v.norm();
    if (norm < 1e-9) throw ConfigError("synthesize_model: degenerate shape basis");
    m.shape_basis.col(col) = v / norm;
  };
  for (int c = skel_dims; c < b_dim; ++c) orthonormalize(c, skel_dims, c - skel_dims);
  for (int c = 0; c < skel_dims; ++c) {
    VecX v = m.shape_basis.col(c);
    for (int k = skel_dims; k < b_dim; ++k) {
      const VecX u = m.shape_basis.col(k);
      v -= u.dot(v) * u;
    }
    m.shape_basis.col(c) = v;
    orthonormalize(c, 0, c);
  }
  m.shape_basis *= config.basis_scale;

  // Distribute vertices over bones; split each bone's quota between the
  // cylindrical part and the two end caps by surface area.
  const int n_verts = config.vertices;
  m.vertex_bone.resize(n_verts);
  m.vertex_u.resize(n_verts);
  m.vertex_offset.resize(n_verts, 3);
  m.skin_weights = MatX::Zero(n_verts, config.joints);
  int vi = 0;
  for (int b = 0; b < bones; ++b) {
    const int quota = n_verts / bones + (b < n_verts % bones ? 1 : 0);
    const Vec3 dir = m.tree.rest_dirs.row(b).transpose();
    Vec3 e1, e2;
    detail::orthonormal_frame(dir, e1, e2);
    const double len = m.base_lengths(b), rad = m.base_radii(b);
    const double cap_fraction = 2.0 * rad / (2.0 * rad + len);
    for (int k = 0; k < quota; ++k, ++vi) {
      m.vertex_bone[vi] = b;
      double u;
      Vec3 offset;
      if (rng.uniform(0.0, 1.0) < cap_fraction) {
        u = rng.uniform(0.0, 1.0) < 0.5 ? 0.0 : 1.0;
        Vec3 s(rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1));
        while (s.norm() < 1e-6) s = Vec3(rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1));
        s.normalize();
        const double axial = s.dot(dir);
        if ((u == 0.0 && axial > 0) || (u == 1.0 && axial < 0)) s -= 2.0 * axial * dir;
        offset = s;
      } else {
        u = rng.uniform(0.0, 1.0);
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        offset = std::cos(phi) * e1 + std::sin(phi) * e2;
      }
      m.vertex_u(vi) = u;
      m.vertex_offset.row(vi) = offset;

      // Skinning: driven by the bone's start joint, blended over the last /
      // first 20% of the bone with the neighboring joint.
      const int start = m.tree.bone_start_joint(b);
      const int end = m.tree.bone_end_joint(b);
      const int grand = m.tree.parents[start];
      if (u > 0.8) {
        const double w_end = 0.5 * (u - 0.8) / 0.2;
        m.skin_weights(vi, end) = w_end;
        m.skin_weights(vi, start) = 1.0 - w_end;
      } else if (u < 0.2 && grand != start) {
        const double w_grand = 0.5 * (0.2 - u) / 0.2;
        m.skin_weights(vi, grand) = w_grand;
        m.skin_weights(vi, start) = 1.0 - w_grand;
      } else {
        m.skin_weights(vi, start) = 1.0;
      }
    }
  }

  ShapeParams zero;
  zero.beta = VecX::Zero(b_dim);
  const BoneAttributes attrs = bone_attributes(m, zero);
  m.template_vertices = rest_vertices(m, attrs, regress_joints(m, attrs));
  return m;
}

}  // namespace bodyid
