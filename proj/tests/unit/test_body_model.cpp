#include <catch2/catch_amalgamated.hpp>

#include "bodyid/body_model.hpp"
#include "bodyid/io.hpp"
#include "support/helpers.hpp"

using namespace bodyid;
using testsupport::chain_model;
using testsupport::single_bone_model;

namespace {

ShapeParams zeros(const BodyModel& m) { return ShapeParams{VecX::Zero(m.shape_dim())}; }

}  // namespace

TEST_CASE("synthesize_model is deterministic and seed-sensitive") {
  const BodyModel a = synthesize_model(7);
  const BodyModel b = synthesize_model(7);
  CHECK(model_to_json_text(a) == model_to_json_text(b));

  const BodyModel c = synthesize_model(8);
  CHECK(MatX(a.template_vertices) != MatX(c.template_vertices));
}

TEST_CASE("synthesized model satisfies its invariants") {
  const BodyModel m = synthesize_model(7);
  CHECK(m.shape_basis.rows() == 32);
  CHECK(m.shape_basis.cols() == 10);
  CHECK(m.tree.parents[0] == 0);
  for (int j = 1; j < m.joint_count(); ++j) CHECK(m.tree.parents[j] < j);
  for (int b = 0; b < m.bone_count(); ++b)
    CHECK(std::abs(m.tree.rest_dirs.row(b).norm() - 1.0) < 1e-9);
  for (int v = 0; v < m.vertex_count(); ++v) {
    CHECK(std::abs(m.skin_weights.row(v).sum() - 1.0) < 1e-9);
    CHECK(m.skin_weights.row(v).minCoeff() >= 0.0);
  }
  // the girth block of the basis never touches length rows
  const int bones = m.bone_count();
  for (int c = 5; c < 10; ++c)
    for (int r = 0; r < bones; ++r) CHECK(m.shape_basis(r, c) == 0.0);

  // beta = 0 reproduces the template exactly
  const BoneAttributes attrs = bone_attributes(m, zeros(m));
  const Points3 rest = rest_vertices(m, attrs, regress_joints(m, attrs));
  CHECK(MatX(rest) == MatX(m.template_vertices));
}

TEST_CASE("synthesize_model rejects invalid dims") {
  CHECK_THROWS_AS(synthesize_model(1, ModelConfig{0, 17, 10}), ConfigError);
  CHECK_THROWS_AS(synthesize_model(1, ModelConfig{512, 0, 10}), ConfigError);
  CHECK_THROWS_AS(synthesize_model(1, ModelConfig{512, 17, 0}), ConfigError);
  CHECK_THROWS_AS(synthesize_model(1, ModelConfig{32, 17, 10}), ConfigError);
}

TEST_CASE("bone_attributes follows the multiplicative map") {
  const BodyModel m = chain_model(5);
  SECTION("beta = 0 gives the template attributes exactly") {
    const BoneAttributes attrs = bone_attributes(m, zeros(m));
    CHECK(attrs.lengths == m.base_lengths);
    CHECK(attrs.radii == m.base_radii);
  }
  SECTION("ln 2 in bone 3's length entry doubles that length") {
    ShapeParams shape = zeros(m);
    shape.beta(3) = std::log(2.0);
    const BoneAttributes attrs = bone_attributes(m, shape);
    CHECK(attrs.lengths(3) == Catch::Approx(2.0 * m.base_lengths(3)).epsilon(1e-15));
    for (int b = 0; b < 3; ++b) CHECK(attrs.lengths(b) == m.base_lengths(b));
  }
  SECTION("attributes stay positive for |beta| <= 5") {
    const BodyModel full = synthesize_model(3);
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
      ShapeParams shape{VecX(full.shape_dim())};
      for (int i = 0; i < full.shape_dim(); ++i) shape.beta(i) = rng.uniform(-5.0, 5.0);
      const BoneAttributes attrs = bone_attributes(full, shape);
      CHECK(attrs.lengths.minCoeff() > 0.0);
      CHECK(attrs.radii.minCoeff() > 0.0);
    }
  }
  SECTION("dimension mismatch is an error") {
    CHECK_THROWS_AS(bone_attributes(m, ShapeParams{VecX::Zero(2)}), DimensionError);
  }
}

TEST_CASE("regress_joints recursion") {
  SECTION("single bone hand case") {
    const BodyModel m = single_bone_model(0.5, 0.1);
    const Points3 joints = regress_joints(m, zeros(m));
    CHECK(joints.row(0).norm() == 0.0);
    CHECK((joints.row(1) - Vec3(0, 0.5, 0).transpose()).norm() < 1e-15);
  }
  SECTION("doubling one bone moves only its subtree") {
    const BodyModel m = chain_model(5);
    const Points3 base = regress_joints(m, zeros(m));
    ShapeParams shape = zeros(m);
    shape.beta(1) = std::log(2.0);  // bone 1 = joint1 -> joint2
    const Points3 moved = regress_joints(m, shape);
    CHECK((moved.row(0) - base.row(0)).norm() == 0.0);
    CHECK((moved.row(1) - base.row(1)).norm() == 0.0);
    for (int j = 2; j < 5; ++j) CHECK((moved.row(j) - base.row(j)).norm() > 0.1);
  }
  SECTION("joints finite for |beta| <= 5") {
    const BodyModel full = synthesize_model(9);
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
      ShapeParams shape{VecX(full.shape_dim())};
      for (int i = 0; i < full.shape_dim(); ++i) shape.beta(i) = rng.uniform(-5.0, 5.0);
      CHECK(regress_joints(full, shape).allFinite());
    }
  }
}

TEST_CASE("lbs behaviour") {
  SECTION("identity pose reproduces the shaped template") {
    const BodyModel m = synthesize_model(7);
    const Points3 posed = lbs(m, zeros(m), PoseParams::rest(m.joint_count()));
    CHECK((MatX(posed) - MatX(m.template_vertices)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("root rotation of 90 degrees about z maps (1,0,0) to (0,1,0)") {
    BodyModel m = single_bone_model(1.0, 0.1, 4);
    m.vertex_u(0) = 0.0;
    m.vertex_offset.row(0) = Vec3(1, 0, 0).transpose();
    m.base_radii(0) = 1.0;  // vertex 0 sits exactly at (1,0,0)
    ShapeParams zero{VecX::Zero(2)};
    const BoneAttributes attrs = bone_attributes(m, zero);
    m.template_vertices = rest_vertices(m, attrs, regress_joints(m, attrs));
    REQUIRE((m.template_vertices.row(0) - Vec3(1, 0, 0).transpose()).norm() < 1e-15);

    PoseParams pose = PoseParams::rest(2);
    pose.theta.row(0) = Vec3(0, 0, kPi / 2.0).transpose();
    const Points3 posed = lbs(m, zero, pose);
    CHECK((posed.row(0) - Vec3(0, 1, 0).transpose()).norm() < 1e-9);
  }
  SECTION("rigid equivariance under a root rotation") {
    const BodyModel m = synthesize_model(4);
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      PoseParams pose = PoseParams::rest(m.joint_count());
      for (int j = 1; j < m.joint_count(); ++j)
        pose.theta.row(j) =
            Vec3(rng.normal(0, 0.1), rng.normal(0, 0.1), rng.normal(0, 0.1)).transpose();
      ShapeParams shape{VecX(m.shape_dim())};
      for (int i = 0; i < m.shape_dim(); ++i) shape.beta(i) = rng.normal(0.0, 0.5);

      const Vec3 root(rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1));
      const Mat3 r = rotation_from_axis_angle(root);
      const Points3 base = lbs(m, shape, pose);
      PoseParams rotated = pose;
      rotated.theta.row(0) = root.transpose();
      const Points3 posed = lbs(m, shape, rotated);
      CHECK((MatX(posed) - MatX(base * r.transpose())).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("project is a scaled truncation plus translation") {
  Camera cam;
  cam.scale = 2.0;
  cam.trans = Vec2(10, 20);
  Points3 pts(1, 3);
  pts << 1, 2, 5;
  const Points2 p = project(cam, pts);
  CHECK(p(0, 0) == 12.0);
  CHECK(p(0, 1) == 24.0);

  Camera ortho;  // scale 1, zero translation: drop z
  Points3 q(2, 3);
  q << 3, -4, 9, 0, 0, -2;
  const Points2 o = project(ortho, q);
  CHECK(o(0, 0) == 3.0);
  CHECK(o(0, 1) == -4.0);
  CHECK(o(1, 0) == 0.0);

  Camera shifted = cam;
  shifted.trans += Vec2(5, -3);
  const Points2 moved = project(shifted, pts);
  CHECK(moved(0, 0) == p(0, 0) + 5.0);
  CHECK(moved(0, 1) == p(0, 1) - 3.0);

  Camera bad;
  bad.scale = 0.0;
  CHECK_THROWS_AS(project(bad, pts), ConfigError);
}

TEST_CASE("view angle decomposition") {
  SECTION("identity") {
    const ViewAngles v = view_angles(PoseParams::rest(2));
    CHECK(v.yaw == 0.0);
    CHECK(v.pitch == 0.0);
    CHECK(v.roll == 0.0);
    CHECK_FALSE(v.gimbal_locked);
  }
  SECTION("pure yaw") {
    PoseParams pose = PoseParams::rest(2);
    pose.theta.row(0) = Vec3(0, kPi / 4.0, 0).transpose();
    const ViewAngles v = view_angles(pose);
    CHECK(v.yaw == Catch::Approx(kPi / 4.0).margin(1e-9));
    CHECK(std::abs(v.pitch) < 1e-9);
    CHECK(std::abs(v.roll) < 1e-9);
  }
  SECTION("recompose round trip away from the degeneracy") {
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
      ViewAngles v;
      v.yaw = rng.uniform(-kPi, kPi);
      v.pitch = rng.uniform(-(kPi / 2.0 - 0.05), kPi / 2.0 - 0.05);
      v.roll = rng.uniform(-kPi, kPi);
      const ViewAngles back = view_angles_from_rotation(rotation_from_view(v));
      CHECK(std::abs(wrap_angle(back.yaw - v.yaw)) < 1e-6);
      CHECK(std::abs(back.pitch - v.pitch) < 1e-6);
      CHECK(std::abs(wrap_angle(back.roll - v.roll)) < 1e-6);
    }
  }
  SECTION("gimbal degeneracy is flagged with zero roll") {
    ViewAngles v;
    v.yaw = 0.4;
    v.pitch = kPi / 2.0;
    v.roll = 0.0;
    const ViewAngles back = view_angles_from_rotation(rotation_from_view(v));
    CHECK(back.gimbal_locked);
    CHECK(back.roll == 0.0);
    CHECK(std::abs(wrap_angle(back.yaw - v.yaw)) < 1e-6);
  }
}

TEST_CASE("pose canonicalization bounds rotation magnitude") {
  PoseParams pose = PoseParams::rest(3);
  pose.theta.row(1) = Vec3(0, 1.5 * kPi, 0).transpose();
  const Mat3 before = rotation_from_axis_angle(pose.theta.row(1));
  pose.canonicalize();
  CHECK(pose.theta.row(1).norm() <= kPi + 1e-12);
  CHECK((rotation_from_axis_angle(pose.theta.row(1)) - before).norm() < 1e-12);
}
