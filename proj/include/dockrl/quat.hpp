#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace dockrl {

// Attitude quaternion, scalar first [w, x, y, z], Hamilton product convention.
// For a chaser state q maps body-frame vectors into the inertial (target)
// frame: v_inertial = q.rotate(v_body).
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Quat() = default;
  Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quat normalized() const {
    const double n = norm();
    return Quat{w / n, x / n, y / n, z / n};
  }

  Quat conjugate() const { return Quat{w, -x, -y, -z}; }

  // Hamilton product: (this) o (rhs)
  Quat operator*(const Quat& r) const {
    return Quat{w * r.w - x * r.x - y * r.y - z * r.z,
                w * r.x + x * r.w + y * r.z - z * r.y,
                w * r.y - x * r.z + y * r.w + z * r.x,
                w * r.z + x * r.y - y * r.x + z * r.w};
  }

  Eigen::Matrix3d rotation_matrix() const {
    Eigen::Matrix3d m;
    m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return m;
  }

  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const {
    // v + 2 qv x (qv x v + w v), cheaper than building the matrix
    const Eigen::Vector3d qv(x, y, z);
    const Eigen::Vector3d t = 2.0 * qv.cross(v);
    return v + w * t + qv.cross(t);
  }

  Eigen::Vector4d coeffs() const { return Eigen::Vector4d(w, x, y, z); }

  // Intrinsic x-y-z (roll phi, pitch theta, yaw psi): R = Rx(phi) Ry(theta) Rz(psi).
  // (0, 180 deg, 0) maps to [0, 0, 1, 0], the nominal chaser attitude.
  static Quat from_euler_xyz(const Eigen::Vector3d& rpy_rad) {
    const double hphi = 0.5 * rpy_rad[0];
    const double hth = 0.5 * rpy_rad[1];
    const double hpsi = 0.5 * rpy_rad[2];
    const Quat qx{std::cos(hphi), std::sin(hphi), 0.0, 0.0};
    const Quat qy{std::cos(hth), 0.0, std::sin(hth), 0.0};
    const Quat qz{std::cos(hpsi), 0.0, 0.0, std::sin(hpsi)};
    return qx * qy * qz;
  }

  // Inverse of from_euler_xyz. Pitch is folded into [-pi/2, pi/2]; at the
  // gimbal-lock points the roll/yaw split is not unique.
  Eigen::Vector3d euler_xyz() const {
    const Eigen::Matrix3d m = rotation_matrix();
    const double sth = std::clamp(m(0, 2), -1.0, 1.0);
    return Eigen::Vector3d(std::atan2(-m(1, 2), m(2, 2)), std::asin(sth),
                           std::atan2(-m(0, 1), m(0, 0)));
  }
};

inline double deg2rad(double d) { return d * M_PI / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / M_PI; }

// wrap an angle difference into (-pi, pi]
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace dockrl
