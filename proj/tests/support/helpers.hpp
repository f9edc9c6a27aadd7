#pragma once

#include <cmath>
#include <functional>

#include "bodyid/body_model.hpp"
#include "bodyid/geometry.hpp"
#include "bodyid/rng.hpp"

namespace testsupport {

using namespace bodyid;

// Two joints, one vertical bone of the given size; vertices ring the
// cylindrical part, all skinned to the root. shape_basis row layout:
// [length; radius], one column per shape dim hitting exactly one row.
inline BodyModel single_bone_model(double length = 1.0, double radius = 0.1, int verts = 32) {
  BodyModel m;
  m.tree.parents = {0, 0};
  m.tree.rest_dirs.resize(1, 3);
  m.tree.rest_dirs.row(0) = Vec3(0, 1, 0).transpose();
  m.base_lengths = VecX::Constant(1, length);
  m.base_radii = VecX::Constant(1, radius);
  m.shape_basis = MatX::Identity(2, 2);
  m.keypoint_count = 2;
  m.vertex_bone.assign(verts, 0);
  m.vertex_u.resize(verts);
  m.vertex_offset.resize(verts, 3);
  m.skin_weights = MatX::Zero(verts, 2);
  for (int i = 0; i < verts; ++i) {
    m.vertex_u(i) = verts == 1 ? 0.5 : static_cast<double>(i) / (verts - 1);
    const double phi = 2.0 * kPi * i / verts;
    m.vertex_offset.row(i) = Vec3(std::cos(phi), 0.0, std::sin(phi)).transpose();
    m.skin_weights(i, 0) = 1.0;
  }
  ShapeParams zero{VecX::Zero(2)};
  const BoneAttributes attrs = bone_attributes(m, zero);
  m.template_vertices = rest_vertices(m, attrs, regress_joints(m, attrs));
  return m;
}

// Straight chain of `joints` joints along +y; shape basis column b scales
// bone b's length (log scale), so beta = ln(2) e_b doubles exactly one bone.
inline BodyModel chain_model(int joints = 5, double length = 0.5, double radius = 0.05,
                             int verts_per_bone = 4) {
  const int bones = joints - 1;
  BodyModel m;
  m.tree.parents.resize(joints);
  m.tree.parents[0] = 0;
  m.tree.rest_dirs.resize(bones, 3);
  m.base_lengths = VecX::Constant(bones, length);
  m.base_radii = VecX::Constant(bones, radius);
  for (int b = 0; b < bones; ++b) {
    m.tree.parents[b + 1] = b;
    m.tree.rest_dirs.row(b) = Vec3(0, 1, 0).transpose();
  }
  m.shape_basis = MatX::Zero(2 * bones, bones);
  for (int b = 0; b < bones; ++b) m.shape_basis(b, b) = 1.0;
  m.keypoint_count = joints;
  const int verts = bones * verts_per_bone;
  m.vertex_bone.resize(verts);
  m.vertex_u.resize(verts);
  m.vertex_offset.resize(verts, 3);
  m.skin_weights = MatX::Zero(verts, joints);
  int vi = 0;
  for (int b = 0; b < bones; ++b)
    for (int k = 0; k < verts_per_bone; ++k, ++vi) {
      m.vertex_bone[vi] = b;
      m.vertex_u(vi) = (k + 0.5) / verts_per_bone;
      const double phi = 2.0 * kPi * k / verts_per_bone;
      m.vertex_offset.row(vi) = Vec3(std::cos(phi), 0.0, std::sin(phi)).transpose();
      m.skin_weights(vi, b) = 1.0;
    }
  ShapeParams zero{VecX::Zero(bones)};
  const BoneAttributes attrs = bone_attributes(m, zero);
  m.template_vertices = rest_vertices(m, attrs, regress_joints(m, attrs));
  return m;
}

inline Points2 random_cloud(Rng& rng, int n, double lo = 0.0, double hi = 224.0) {
  Points2 pts(n, 2);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = rng.uniform(lo, hi);
    pts(i, 1) = rng.uniform(lo, hi);
  }
  return pts;
}

// central finite difference of f at x along coordinate slot
inline double central_diff(const std::function<double()>& f, double& slot, double h = 1e-5) {
  const double saved = slot;
  slot = saved + h;
  const double fp = f();
  slot = saved - h;
  const double fm = f();
  slot = saved;
  return (fp - fm) / (2.0 * h);
}

inline bool grad_close(double analytic, double numeric, double rel_tol = 1e-4,
                       double abs_floor = 1e-7) {
  return std::abs(analytic - numeric) <=
         rel_tol * std::max(std::abs(analytic), std::abs(numeric)) + abs_floor;
}

}  // namespace testsupport
