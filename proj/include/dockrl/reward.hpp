#pragma once

#include <Eigen/Dense>

#include "dockrl/dynamics.hpp"
#include "dockrl/quat.hpp"

namespace dockrl {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

// Shaping and bonus weights. Defaults are the shipped values; the goal
// attitude is the -60 deg roll docked orientation with zero rates.
struct RewardWeights {
  Eigen::Matrix3d M = 2e5 * Eigen::Matrix3d::Identity();  // reference-tracking accel error
  Matrix6d Q = 20.0 * Matrix6d::Identity();               // attitude + rate error
  // control effort on [F; L]
  Matrix6d P =
      (Vector6d() << 1e-5, 1e-5, 1e-5, 1.11e-6, 1.11e-6, 1.11e-6).finished().asDiagonal();
  double c = 10.0;                // collision coefficient
  double d = 1000.0;              // docking bonus
  double gamma1 = 0.98;           // shaping discount
  double gamma2 = 0.995;          // bonus discount, deliberately larger
  Quat q_des = Quat::from_euler_xyz({deg2rad(-60.0), 0.0, 0.0});
  Eigen::Vector3d w_des = Eigen::Vector3d::Zero();

  // throws std::invalid_argument on violated invariants
  void validate() const;
};

// [2 * vec(q_des * q^-1); w - w_des] with the error quaternion sign picked so
// its scalar part is >= 0 (shortest rotation; both covers of q map to the
// same error). Throws std::invalid_argument for non-unit q.
Vector6d attitude_error(const Quat& q, const Eigen::Vector3d& w, const RewardWeights& weights);

// Per-step shaping penalty, split so logs can attribute it. Every term is
// <= 0 and total is their sum.
struct ShapingTerms {
  double lqr = 0.0;        // -(a - a_ref)' M (a - a_ref)
  double attitude = 0.0;   // -alpha' Q alpha
  double control = 0.0;    // -u' P u
  double collision = 0.0;  // -c sin(pi/2 * |r_p| / r_col) while inside the box
  double total = 0.0;
};

ShapingTerms shaping_terms(const ChaserState& s, const Vector6d& u,
                           const Eigen::Vector3d& accel_actual,
                           const Eigen::Vector3d& accel_ref, bool collided, double r_p_norm,
                           double r_col, const RewardWeights& weights);

double shaping_reward(const ChaserState& s, const Vector6d& u,
                      const Eigen::Vector3d& accel_actual, const Eigen::Vector3d& accel_ref,
                      bool collided, double r_p_norm, double r_col,
                      const RewardWeights& weights);

double terminal_bonus(bool dock_success, const RewardWeights& weights);

}  // namespace dockrl
