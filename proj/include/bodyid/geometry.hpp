#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "bodyid/error.hpp"

namespace bodyid {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
// Row-major point containers: one point per row.
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;

inline constexpr double kPi = 3.14159265358979323846;

// Wrap an angle to [-pi, pi).
inline double wrap_angle(double a) {
  const double two_pi = 2.0 * kPi;
  double w = a - two_pi * std::floor((a + kPi) / two_pi);
  // floor rounding can leave w == pi when a is a tiny negative offset below -pi
  if (w >= kPi) w -= two_pi;
  return w;
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Rodrigues: axis-angle vector -> rotation matrix.
inline Mat3 rotation_from_axis_angle(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-12) {
    // second-order expansion keeps the map smooth through zero
    const Mat3 k = skew(v);
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const Vec3 axis = v / angle;
  const Mat3 k = skew(axis);
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

// Log map: rotation matrix -> axis-angle vector with angle in [0, pi].
inline Vec3 axis_angle_from_rotation(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

// Partial derivatives of rotation_from_axis_angle w.r.t. the three vector
// components (Gallego & Yezzi closed form). out[i] = dR/dv_i.
inline void rotation_jacobian(const Vec3& v, const Mat3& r, Mat3 out[3]) {
  const double angle2 = v.squaredNorm();
  if (angle2 < 1e-16) {
    for (int i = 0; i < 3; ++i) out[i] = skew(Vec3::Unit(i));
    return;
  }
  const Mat3 eye_minus_r = Mat3::Identity() - r;
  for (int i = 0; i < 3; ++i) {
    const Vec3 e = Vec3::Unit(i);
    const Vec3 w = v.cross(eye_minus_r * e);
    out[i] = ((v(i) * skew(v) + skew(w)) / angle2) * r;
  }
}

inline Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}

inline Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}

inline Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

}  // namespace bodyid
