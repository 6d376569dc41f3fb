#pragma once

#include <Eigen/Dense>

#include "dockrl/dynamics.hpp"
#include "dockrl/rng.hpp"

namespace dockrl {

// Success window around the docked state. Defaults are the shipped values;
// angles are kept in degrees here because that is how they are specified and
// reported everywhere.
struct DockingConditions {
  double r_p_tol_m = 0.15;      // per-axis port position window
  double v_px_goal_ms = 0.10;   // desired closing speed
  double v_px_lo_ms = 0.05;     // closing speed window
  double v_px_hi_ms = 0.15;
  double v_yz_tol_ms = 0.10;    // cross-track port speed
  Eigen::Vector3d euler_goal_deg{-60.0, 0.0, 0.0};
  double euler_tol_deg = 5.0;
  double w_tol_degs = 0.75;     // per-axis body rate
};

// Uniform box of initial conditions; attitude specified as intrinsic x-y-z
// Euler angles in degrees, rates in deg/s.
struct InitialConditionRange {
  Eigen::Vector3d r_center_m{-20.0, 0.0, 0.0};
  Eigen::Vector3d r_halfwidth_m{2.0, 2.0, 2.0};
  Eigen::Vector3d v_center_ms{0.0, 0.0, 0.0};
  Eigen::Vector3d v_halfwidth_ms{0.1, 0.1, 0.1};
  Eigen::Vector3d euler_center_deg{0.0, 180.0, 0.0};
  Eigen::Vector3d euler_halfwidth_deg{20.0, 20.0, 20.0};
  Eigen::Vector3d w_center_degs{0.0, 0.0, 0.0};
  Eigen::Vector3d w_halfwidth_degs{5.0, 5.0, 5.0};
};

// Full scenario description. Defaults reproduce the shipped configuration:
// testing ranges in ic_test, doubled halfwidths in ic_train. Mass properties
// are a placeholder (no published values exist for them); the shipped config
// file flags them as such.
struct ScenarioConfig {
  double dt_s = 1.0;
  double t_limit_train_s = 150.0;
  double t_limit_test_s = 250.0;

  Eigen::Vector3d f_max_n{790.80, 790.80, 790.80};
  Eigen::Vector3d l_max_nm{2534.91, 2534.91, 2534.91};

  Eigen::Vector3d r_port_body_m{4.479, 0.0, 0.0};     // chaser port in body frame
  Eigen::Vector3d r_target_port_m{-3.250, 0.0, 0.0};  // target port, inertial

  double box_y_m = 7.0;
  double box_z_m = 7.0;
  double box_depth_x_m = 7.0;  // extent behind the docking face

  MassProperties mass_props{
      30000.0, Eigen::Matrix3d(Eigen::Vector3d(88000.0, 113000.0, 113000.0).asDiagonal())};
  bool mass_props_placeholder = true;

  DockingConditions docking;
  InitialConditionRange ic_test;
  InitialConditionRange ic_train{.r_halfwidth_m = {4.0, 4.0, 4.0},
                                 .v_halfwidth_ms = {0.2, 0.2, 0.2},
                                 .euler_halfwidth_deg = {40.0, 40.0, 40.0},
                                 .w_halfwidth_degs = {10.0, 10.0, 10.0}};

  // port velocity: rotate body rates into the inertial frame before the
  // lever-arm cross product (false reproduces the literal body-rate reading)
  bool port_rate_in_inertial = true;

  // throws std::invalid_argument on violated invariants
  void validate() const;
};

// Uniform draw per scalar component, in a fixed order (r, v, euler, w; x,y,z
// within each) so that a given seed always produces the same state.
ChaserState sample_initial_condition(const InitialConditionRange& range, Rng& rng);

struct DockingReport {
  bool success = false;
  bool pos_ok = false;   // per-axis |r_p| window
  bool vx_ok = false;    // closing speed window
  bool vyz_ok = false;   // cross-track speed window
  bool att_ok = false;   // Euler angles near the goal
  bool rate_ok = false;  // per-axis body rates
  Eigen::Vector3d r_p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_p = Eigen::Vector3d::Zero();
  Eigen::Vector3d euler_deg = Eigen::Vector3d::Zero();
  Eigen::Vector3d w_degs = Eigen::Vector3d::Zero();
};

// All comparisons inclusive: a state exactly on a bound counts as docked.
DockingReport check_docking(const ChaserState& s, const ScenarioConfig& cfg);

struct CollisionCheck {
  bool collided = false;
  double r_p_norm = 0.0;
};

// Collided iff the chaser port point is strictly inside the target box and
// the state is not a successful dock. The box opens behind the docking face:
// x in (r_t_x, r_t_x + depth), |y| < box_y/2, |z| < box_z/2 around the target
// centerline.
CollisionCheck check_collision(const ChaserState& s, const ScenarioConfig& cfg);

// Distance from the target port to the farthest point of the box front face;
// scales the collision penalty.
double max_collision_distance(const ScenarioConfig& cfg);

// Canonical success state: port-on-port at the goal attitude, closing at the
// goal speed, no rates. Useful as an anchor for boundary tests.
ChaserState make_docked_state(const ScenarioConfig& cfg);

}  // namespace dockrl
