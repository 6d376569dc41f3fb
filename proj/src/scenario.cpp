#include "dockrl/scenario.hpp"

#include <stdexcept>

namespace dockrl {

void ScenarioConfig::validate() const {
  if (!(dt_s > 0.0)) throw std::invalid_argument("scenario: dt_s must be positive");
  if (!(t_limit_train_s > 0.0) || t_limit_test_s < t_limit_train_s)
    throw std::invalid_argument("scenario: need 0 < t_limit_train_s <= t_limit_test_s");
  if (f_max_n.minCoeff() <= 0.0 || l_max_nm.minCoeff() <= 0.0)
    throw std::invalid_argument("scenario: actuator limits must be strictly positive");
  if (box_y_m < 0.0 || box_z_m < 0.0 || box_depth_x_m < 0.0)
    throw std::invalid_argument("scenario: box dimensions must be non-negative");

  const DockingConditions& d = docking;
  if (!(d.v_px_lo_ms < d.v_px_goal_ms && d.v_px_goal_ms < d.v_px_hi_ms))
    throw std::invalid_argument("scenario: need v_px_lo < v_px_goal < v_px_hi");
  if (d.r_p_tol_m <= 0.0 || d.v_yz_tol_ms <= 0.0 || d.euler_tol_deg <= 0.0 || d.w_tol_degs <= 0.0)
    throw std::invalid_argument("scenario: docking tolerances must be positive");

  for (const InitialConditionRange* icr : {&ic_test, &ic_train}) {
    if (icr->r_halfwidth_m.minCoeff() < 0.0 || icr->v_halfwidth_ms.minCoeff() < 0.0 ||
        icr->euler_halfwidth_deg.minCoeff() < 0.0 || icr->w_halfwidth_degs.minCoeff() < 0.0)
      throw std::invalid_argument("scenario: initial-condition halfwidths must be non-negative");
  }
}

ChaserState sample_initial_condition(const InitialConditionRange& range, Rng& rng) {
  auto draw3 = [&rng](const Eigen::Vector3d& c, const Eigen::Vector3d& h) {
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) out[i] = rng.uniform(c[i] - h[i], c[i] + h[i]);
    return out;
  };
  ChaserState s;
  s.r = draw3(range.r_center_m, range.r_halfwidth_m);
  s.v = draw3(range.v_center_ms, range.v_halfwidth_ms);
  const Eigen::Vector3d euler_deg = draw3(range.euler_center_deg, range.euler_halfwidth_deg);
  s.q = Quat::from_euler_xyz(euler_deg * M_PI / 180.0).normalized();
  s.w = draw3(range.w_center_degs, range.w_halfwidth_degs) * M_PI / 180.0;
  return s;
}

DockingReport check_docking(const ChaserState& s, const ScenarioConfig& cfg) {
  const DockingConditions& d = cfg.docking;
  const PortState p =
      relative_port_state(s, cfg.r_port_body_m, cfg.r_target_port_m, cfg.port_rate_in_inertial);

  DockingReport rep;
  rep.r_p = p.r_p;
  rep.v_p = p.v_p;
  rep.euler_deg = s.q.euler_xyz() * 180.0 / M_PI;
  rep.w_degs = s.w * 180.0 / M_PI;

  rep.pos_ok = p.r_p.cwiseAbs().maxCoeff() <= d.r_p_tol_m;
  rep.vx_ok = p.v_p[0] >= d.v_px_lo_ms && p.v_p[0] <= d.v_px_hi_ms;
  rep.vyz_ok = std::abs(p.v_p[1]) <= d.v_yz_tol_ms && std::abs(p.v_p[2]) <= d.v_yz_tol_ms;

  rep.att_ok = true;
  for (int i = 0; i < 3; ++i) {
    const double err =
        rad2deg(wrap_angle(deg2rad(rep.euler_deg[i] - d.euler_goal_deg[i])));
    if (std::abs(err) > d.euler_tol_deg) rep.att_ok = false;
  }
  rep.rate_ok = rep.w_degs.cwiseAbs().maxCoeff() <= d.w_tol_degs;

  rep.success = rep.pos_ok && rep.vx_ok && rep.vyz_ok && rep.att_ok && rep.rate_ok;
  return rep;
}

CollisionCheck check_collision(const ChaserState& s, const ScenarioConfig& cfg) {
  const PortState p =
      relative_port_state(s, cfg.r_port_body_m, cfg.r_target_port_m, cfg.port_rate_in_inertial);
  CollisionCheck c;
  c.r_p_norm = p.r_p.norm();
  // box in inertial coordinates: behind the docking face in x, centered on
  // the target centerline in y/z
  const Eigen::Vector3d port = p.r_p + cfg.r_target_port_m;
  const bool inside = port[0] > cfg.r_target_port_m[0] &&
                      port[0] < cfg.r_target_port_m[0] + cfg.box_depth_x_m &&
                      std::abs(port[1]) < 0.5 * cfg.box_y_m &&
                      std::abs(port[2]) < 0.5 * cfg.box_z_m;
  c.collided = inside && !check_docking(s, cfg).success;
  return c;
}

double max_collision_distance(const ScenarioConfig& cfg) {
  return std::sqrt(0.25 * cfg.box_y_m * cfg.box_y_m + 0.25 * cfg.box_z_m * cfg.box_z_m);
}

ChaserState make_docked_state(const ScenarioConfig& cfg) {
  ChaserState s;
  s.q = Quat::from_euler_xyz(cfg.docking.euler_goal_deg * M_PI / 180.0).normalized();
  s.r = cfg.r_target_port_m - s.q.rotate(cfg.r_port_body_m);
  s.v = Eigen::Vector3d(cfg.docking.v_px_goal_ms, 0.0, 0.0);
  s.w = Eigen::Vector3d::Zero();
  return s;
}

}  // namespace dockrl
