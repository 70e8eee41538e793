#pragma once

// ZYX (roll, pitch, yaw) Euler-angle utilities, world frame z-up.
//
//   R = Rz(yaw) * Ry(pitch) * Rx(roll)        (body -> world)
//   omega_body = W(phi) * phi_dot

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "errors.hpp"

namespace jetmpc {

/// Distance from +-pi/2 pitch at which the parameterisation is treated as singular.
inline constexpr double kEulerSingularityMargin = 1e-3;

/// S(x) such that S(x) y = x cross y.
inline Eigen::Matrix3d skew(const Eigen::Vector3d& x) {
  Eigen::Matrix3d s;
  s << 0.0, -x.z(), x.y(),
       x.z(), 0.0, -x.x(),
       -x.y(), x.x(), 0.0;
  return s;
}

inline bool near_gimbal_lock(double pitch) {
  return std::abs(pitch) >= std::numbers::pi / 2.0 - kEulerSingularityMargin;
}

/// Rotation body -> world for Euler angles (roll, pitch, yaw).
inline Eigen::Matrix3d rotation_from_euler(const Eigen::Vector3d& phi) {
  if (!phi.allFinite()) throw InvalidArgument("rotation_from_euler: non-finite angles");
  return (Eigen::AngleAxisd(phi.z(), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(phi.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(phi.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

/// Inverse of rotation_from_euler. Throws SingularityError at gimbal lock.
inline Eigen::Vector3d euler_from_rotation(const Eigen::Matrix3d& r) {
  const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
  const double pitch = std::asin(sp);
  if (near_gimbal_lock(pitch)) {
    throw SingularityError("euler_from_rotation: pitch at gimbal lock");
  }
  return {std::atan2(r(2, 1), r(2, 2)), pitch, std::atan2(r(1, 0), r(0, 0))};
}

/// W(phi) with omega_body = W phi_dot. det W = cos(pitch).
inline Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& phi) {
  if (!phi.allFinite()) throw InvalidArgument("euler_rate_matrix: non-finite angles");
  if (near_gimbal_lock(phi.y())) {
    throw SingularityError("euler_rate_matrix: pitch within singularity margin of +-pi/2");
  }
  const double sr = std::sin(phi.x()), cr = std::cos(phi.x());
  const double sp = std::sin(phi.y()), cp = std::cos(phi.y());
  Eigen::Matrix3d w;
  w << 1.0, 0.0, -sp,
       0.0, cr, sr * cp,
       0.0, -sr, cr * cp;
  return w;
}

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace jetmpc
