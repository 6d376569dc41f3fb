#pragma once

#include <Eigen/Dense>

#include "dockrl/quat.hpp"

namespace dockrl {

// Rigid-body mass properties. Validated on construction: positive mass,
// symmetric positive-definite inertia tensor.
struct MassProperties {
  double mass_kg;
  Eigen::Matrix3d inertia;      // body axes, kg m^2
  Eigen::Matrix3d inertia_inv;  // cached inverse

  MassProperties(double mass, const Eigen::Matrix3d& j);
};

struct ChaserState {
  Eigen::Vector3d r = Eigen::Vector3d::Zero();  // inertial position, m
  Eigen::Vector3d v = Eigen::Vector3d::Zero();  // inertial velocity, m/s
  Quat q;                                       // body -> inertial
  Eigen::Vector3d w = Eigen::Vector3d::Zero();  // body rates, rad/s
};

// Commanded wrench, already clamped to actuator limits. The force acts in
// the inertial frame (translational ZOH input); the torque enters the
// rigid-body rate equation directly, i.e. body frame.
struct ControlAction {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();   // N
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();  // N m
};

// 4x3 map from body rates to quaternion rates: q_dot = 0.5 * omega_matrix(q) * w.
// Throws std::invalid_argument if q is not unit norm (tolerance 1e-6).
Eigen::Matrix<double, 4, 3> omega_matrix(const Quat& q);

inline constexpr int kRotationSubsteps = 10;

// One sample-period propagation. Translation is the exact zero-order-hold
// double-integrator update; rotation integrates quaternion kinematics and the
// rigid-body rate equation with fixed-step RK4, renormalizing the quaternion
// after every substep. Translation and rotation are fully decoupled.
ChaserState step(const ChaserState& s, const ControlAction& u, const MassProperties& mp,
                 double dt, int substeps = kRotationSubsteps);

// Inertial force command expressed in the chaser body frame: R(q)^T f.
Eigen::Vector3d body_force(const Quat& q, const Eigen::Vector3d& f_inertial);

struct PortState {
  Eigen::Vector3d r_p;  // chaser port position relative to the target port, m
  Eigen::Vector3d v_p;  // chaser port velocity relative to the target port, m/s
};

// Relative docking-port state. r_p = r + R(q) r_port_body - r_target_port.
// The port velocity adds the lever-arm term w x (R(q) r_port_body); with
// rate_in_inertial the body rates are rotated into the inertial frame first
// (the physically consistent form), otherwise the raw body-rate components
// are used in the inertial cross product.
PortState relative_port_state(const ChaserState& s, const Eigen::Vector3d& r_port_body,
                              const Eigen::Vector3d& r_target_port,
                              bool rate_in_inertial = true);

}  // namespace dockrl
