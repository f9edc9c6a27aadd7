#include <catch2/catch_amalgamated.hpp>

#include "bodyid/geometry.hpp"
#include "bodyid/rng.hpp"
#include "support/helpers.hpp"

using namespace bodyid;

TEST_CASE("wrap_angle maps into [-pi, pi)") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == Catch::Approx(-kPi));
  CHECK(wrap_angle(-kPi) == Catch::Approx(-kPi));
  CHECK(wrap_angle(3.0 * kPi / 2.0) == Catch::Approx(-kPi / 2.0));
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double w = wrap_angle(a);
    CHECK(w >= -kPi);
    CHECK(w < kPi);
    CHECK(std::abs(std::sin(w) - std::sin(a)) < 1e-9);
    CHECK(std::abs(std::cos(w) - std::cos(a)) < 1e-9);
  }
}

TEST_CASE("axis-angle exp/log round trip") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Vec3 v(rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1));
    v *= rng.uniform(0.0, 3.0) / std::max(v.norm(), 1e-12);
    const Mat3 r = rotation_from_axis_angle(v);
    CHECK((r * r.transpose() - Mat3::Identity()).norm() < 1e-12);
    CHECK(r.determinant() == Catch::Approx(1.0).margin(1e-12));
    const Vec3 back = axis_angle_from_rotation(r);
    CHECK((rotation_from_axis_angle(back) - r).norm() < 1e-9);
  }
  CHECK((rotation_from_axis_angle(Vec3::Zero()) - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("rotation_jacobian matches finite differences") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Vec3 v(rng.normal(0, 0.8), rng.normal(0, 0.8), rng.normal(0, 0.8));
    const Mat3 r = rotation_from_axis_angle(v);
    Mat3 jac[3];
    rotation_jacobian(v, r, jac);
    for (int i = 0; i < 3; ++i) {
      Vec3 vp = v, vm = v;
      vp(i) += 1e-6;
      vm(i) -= 1e-6;
      const Mat3 fd = (rotation_from_axis_angle(vp) - rotation_from_axis_angle(vm)) / 2e-6;
      CHECK((jac[i] - fd).norm() < 1e-6);
    }
  }
  // limit at zero
  Mat3 jac[3];
  rotation_jacobian(Vec3::Zero(), Mat3::Identity(), jac);
  CHECK((jac[0] - skew(Vec3::UnitX())).norm() == 0.0);
}
