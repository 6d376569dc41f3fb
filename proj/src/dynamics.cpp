#include "dockrl/dynamics.hpp"

#include <stdexcept>

namespace dockrl {

MassProperties::MassProperties(double mass, const Eigen::Matrix3d& j) : mass_kg(mass), inertia(j) {
  if (!(mass > 0.0)) throw std::invalid_argument("MassProperties: mass must be positive");
  const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
  if ((j - j.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("MassProperties: inertia tensor must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(j);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("MassProperties: inertia tensor must be positive definite");
  inertia_inv = j.inverse();
}

Eigen::Matrix<double, 4, 3> omega_matrix(const Quat& q) {
  if (std::abs(q.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("omega_matrix: quaternion must be unit norm");
  Eigen::Matrix<double, 4, 3> m;
  m << -q.x, -q.y, -q.z,  //
      q.w, -q.z, q.y,     //
      q.z, q.w, -q.x,     //
      -q.y, q.x, q.w;
  return m;
}

namespace {

// attitude state derivative: y = [q(4); w(3)], torque held constant over the sample
void att_deriv(const Eigen::Matrix<double, 7, 1>& y, const Eigen::Vector3d& torque,
               const MassProperties& mp, Eigen::Matrix<double, 7, 1>& dy) {
  const double qw = y[0], qx = y[1], qy = y[2], qz = y[3];
  const Eigen::Vector3d w = y.tail<3>();
  // 0.5 * omega_matrix(q) * w, written out; mid-stage q may be slightly off
  // unit norm, which is fine here
  dy[0] = 0.5 * (-qx * w[0] - qy * w[1] - qz * w[2]);
  dy[1] = 0.5 * (qw * w[0] - qz * w[1] + qy * w[2]);
  dy[2] = 0.5 * (qz * w[0] + qw * w[1] - qx * w[2]);
  dy[3] = 0.5 * (-qy * w[0] + qx * w[1] + qw * w[2]);
  dy.tail<3>() = mp.inertia_inv * (torque - w.cross(mp.inertia * w));
}

}  // namespace

ChaserState step(const ChaserState& s, const ControlAction& u, const MassProperties& mp,
                 double dt, int substeps) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  if (substeps < 1) throw std::invalid_argument("step: substeps must be >= 1");
  if (std::abs(s.q.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("step: state quaternion must be unit norm");

  ChaserState out = s;

  // exact ZOH double integrator
  const Eigen::Vector3d a = u.force / mp.mass_kg;
  out.r = s.r + s.v * dt + 0.5 * a * dt * dt;
  out.v = s.v + a * dt;

  // RK4 on [q; w], renormalize q after every substep
  const double h = dt / substeps;
  Eigen::Matrix<double, 7, 1> y, k1, k2, k3, k4;
  y << s.q.w, s.q.x, s.q.y, s.q.z, s.w;
  for (int i = 0; i < substeps; ++i) {
    att_deriv(y, u.torque, mp, k1);
    att_deriv(y + 0.5 * h * k1, u.torque, mp, k2);
    att_deriv(y + 0.5 * h * k2, u.torque, mp, k3);
    att_deriv(y + h * k3, u.torque, mp, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    y.head<4>() /= y.head<4>().norm();
  }
  out.q = Quat{y[0], y[1], y[2], y[3]};
  out.w = y.tail<3>();
  return out;
}

Eigen::Vector3d body_force(const Quat& q, const Eigen::Vector3d& f_inertial) {
  return q.conjugate().rotate(f_inertial);
}

PortState relative_port_state(const ChaserState& s, const Eigen::Vector3d& r_port_body,
                              const Eigen::Vector3d& r_target_port, bool rate_in_inertial) {
  const Eigen::Vector3d arm = s.q.rotate(r_port_body);
  const Eigen::Vector3d w_used = rate_in_inertial ? s.q.rotate(s.w) : s.w;
  PortState p;
  p.r_p = s.r + arm - r_target_port;
  p.v_p = s.v + w_used.cross(arm);
  return p;
}

}  // namespace dockrl
