#include "dockrl/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dockrl/errors.hpp"
#include "dockrl/ioutil.hpp"
#include "dockrl/quat.hpp"

namespace dockrl {

const std::vector<StatField>& stat_fields() {
  static const std::vector<StatField> fields = {
      {"length_s", &TrajectoryStats::length_s},
      {"pos_err_y_m", &TrajectoryStats::pos_err_y_m},
      {"pos_err_z_m", &TrajectoryStats::pos_err_z_m},
      {"vel_err_y_ms", &TrajectoryStats::vel_err_y_ms},
      {"vel_err_z_ms", &TrajectoryStats::vel_err_z_ms},
      {"final_vx_ms", &TrajectoryStats::final_vx_ms},
      {"att_err_deg", &TrajectoryStats::att_err_deg},
      {"rate_err_x_degs", &TrajectoryStats::rate_err_x_degs},
      {"rate_err_y_degs", &TrajectoryStats::rate_err_y_degs},
      {"rate_err_z_degs", &TrajectoryStats::rate_err_z_degs},
      {"thrust_n", &TrajectoryStats::thrust_n},
      {"torque_nm", &TrajectoryStats::torque_nm},
  };
  return fields;
}

std::pair<double, double> expenditure(const EpisodeRecord& ep, const ScenarioConfig& cfg) {
  double thrust = 0.0;
  double torque = 0.0;
  for (int t = 0; t < ep.steps(); ++t) {
    const ControlAction u = scale_action(ep.actions.col(t), cfg.f_max_n, cfg.l_max_nm);
    thrust += u.force.cwiseAbs().sum() * cfg.dt_s;
    torque += u.torque.cwiseAbs().sum() * cfg.dt_s;
  }
  return {thrust, torque};
}

TrajectoryStats trajectory_stats(const EpisodeRecord& ep, const RolloutContext& ctx) {
  TrajectoryStats st;
  const ChaserState& fin = ep.states.back();
  const PortState p = relative_port_state(fin, ctx.scenario.r_port_body_m,
                                          ctx.scenario.r_target_port_m,
                                          ctx.scenario.port_rate_in_inertial);
  st.length_s = ep.steps() * ctx.scenario.dt_s;
  st.pos_err_y_m = std::abs(p.r_p[1]);
  st.pos_err_z_m = std::abs(p.r_p[2]);
  st.vel_err_y_ms = std::abs(p.v_p[1]);
  st.vel_err_z_ms = std::abs(p.v_p[2]);
  st.final_vx_ms = p.v_p[0];

  // axis-angle distance to the goal attitude (double cover folded out)
  const Quat q_err = (ctx.reward.q_des.conjugate() * fin.q).normalized();
  const double vec_norm =
      std::sqrt(q_err.x * q_err.x + q_err.y * q_err.y + q_err.z * q_err.z);
  st.att_err_deg = rad2deg(2.0 * std::atan2(vec_norm, std::abs(q_err.w)));

  const Eigen::Vector3d rate_err = (fin.w - ctx.reward.w_des).cwiseAbs();
  st.rate_err_x_degs = rad2deg(rate_err[0]);
  st.rate_err_y_degs = rad2deg(rate_err[1]);
  st.rate_err_z_degs = rad2deg(rate_err[2]);

  const auto [thrust, torque] = expenditure(ep, ctx.scenario);
  st.thrust_n = thrust;
  st.torque_nm = torque;
  st.docked = ep.docked;
  st.collided = ep.collided;
  return st;
}

MonteCarloReport aggregate_report(std::vector<TrajectoryStats> per_trial) {
  MonteCarloReport rep;
  rep.trials = int(per_trial.size());
  rep.per_trial = std::move(per_trial);

  bool first_success = true;
  bool first_any = true;
  for (const TrajectoryStats& st : rep.per_trial) {
    if (st.docked) ++rep.docked;
    if (st.collided) ++rep.collided;
    for (const StatField& f : stat_fields()) {
      rep.mean_all.*(f.member) += st.*(f.member);
      rep.max_all.*(f.member) = first_any ? st.*(f.member)
                                          : std::max(rep.max_all.*(f.member), st.*(f.member));
      if (st.docked) {
        rep.mean_success.*(f.member) += st.*(f.member);
        rep.max_success.*(f.member) =
            first_success ? st.*(f.member)
                          : std::max(rep.max_success.*(f.member), st.*(f.member));
      }
    }
    first_any = false;
    if (st.docked) first_success = false;
  }
  for (const StatField& f : stat_fields()) {
    if (rep.trials > 0) rep.mean_all.*(f.member) /= double(rep.trials);
    if (rep.docked > 0) rep.mean_success.*(f.member) /= double(rep.docked);
  }
  return rep;
}

EpisodeRecord evaluation_episode(const PolicySnapshot& snap, const RolloutContext& ctx,
                                 uint64_t master_seed, uint64_t trial_index) {
  Rng rng(derive_seed(master_seed, trial_index));
  const ChaserState x0 = sample_initial_condition(ctx.scenario.ic_test, rng);
  return rollout(snap, ctx, x0, rng, /*stochastic=*/false);
}

MonteCarloReport monte_carlo(const PolicySnapshot& snap, const RolloutContext& ctx, int n,
                             uint64_t master_seed, int workers) {
  if (ctx.training)
    throw std::invalid_argument("monte_carlo: requires a testing context");
  if (n < 0) throw std::invalid_argument("monte_carlo: negative trial count");
  std::vector<TrajectoryStats> per_trial(n);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      per_trial[i] = trajectory_stats(
          evaluation_episode(snap, ctx, master_seed, uint64_t(i)), ctx);
    }
  };
  const int pool_size = std::max(1, std::min(workers, n));
  if (pool_size <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (int w = 0; w < pool_size; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return aggregate_report(std::move(per_trial));
}

namespace {

void write_aggregate(std::ostream& os, const char* label, const TrajectoryStats& mean,
                     const TrajectoryStats& max, int count) {
  os << "section," << label << '\n';
  if (count == 0) {
    os << "no-data\n";
    return;
  }
  os << "field,mean,max\n";
  for (const StatField& f : stat_fields())
    os << f.name << ',' << g17(mean.*(f.member)) << ',' << g17(max.*(f.member)) << '\n';
}

}  // namespace

void write_report(const MonteCarloReport& rep, std::ostream& os) {
  os << "monte_carlo_report\n";
  os << "trials," << rep.trials << '\n';
  os << "docked," << rep.docked << '\n';
  os << "collided," << rep.collided << '\n';
  if (rep.trials > 0)
    os << "success_fraction," << g17(double(rep.docked) / double(rep.trials)) << '\n';
  else
    os << "success_fraction,no-data\n";
  os << "reference_success_fraction," << g17(kReferenceSuccessFraction) << '\n';
  os << "reference_mean_length_s," << g17(kReferenceMeanLengthS) << '\n';
  write_aggregate(os, "successful_trials", rep.mean_success, rep.max_success, rep.docked);
  write_aggregate(os, "all_trials", rep.mean_all, rep.max_all, rep.trials);
}

void save_report(const MonteCarloReport& rep, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path.string() + " for writing");
  write_report(rep, f);
  f.flush();
  if (!f) throw ConfigError("failed writing " + path.string());
}

void export_trajectory(const EpisodeRecord& ep, const RolloutContext& ctx,
                       const std::filesystem::path& path) {
  if (ep.docked && !check_docking(ep.states.back(), ctx.scenario).success)
    throw NumericalError("episode marked docked but its final state fails the docking check");

  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path.string() + " for writing");
  f << "t_s,r_x,r_y,r_z,v_x,v_y,v_z,q_w,q_x,q_y,q_z,"
       "euler_x_deg,euler_y_deg,euler_z_deg,w_x_rads,w_y_rads,w_z_rads,"
       "f_x_n,f_y_n,f_z_n,l_x_nm,l_y_nm,l_z_nm,"
       "r_p_x,r_p_y,r_p_z,v_p_x,v_p_y,v_p_z,r1,cum_reward\n";

  const int steps = ep.steps();
  double cum = 0.0;  // reward collected on arrival at the row's state
  for (int t = 0; t <= steps; ++t) {
    const ChaserState& s = ep.states[size_t(t)];
    if (t > 0) cum += ep.r1[t - 1] + ep.r2[t - 1];
    ControlAction u;  // zero on the terminal row: no command is issued there
    double r1 = 0.0;
    if (t < steps) {
      u = scale_action(ep.actions.col(t), ctx.scenario.f_max_n, ctx.scenario.l_max_nm);
      r1 = ep.r1[t];
    }
    const PortState p =
        relative_port_state(s, ctx.scenario.r_port_body_m, ctx.scenario.r_target_port_m,
                            ctx.scenario.port_rate_in_inertial);
    const Eigen::Vector3d euler_deg = s.q.euler_xyz() * (180.0 / M_PI);

    f << g17(t * ctx.scenario.dt_s);
    for (int i = 0; i < 3; ++i) f << ',' << g17(s.r[i]);
    for (int i = 0; i < 3; ++i) f << ',' << g17(s.v[i]);
    f << ',' << g17(s.q.w) << ',' << g17(s.q.x) << ',' << g17(s.q.y) << ',' << g17(s.q.z);
    for (int i = 0; i < 3; ++i) f << ',' << g17(euler_deg[i]);
    for (int i = 0; i < 3; ++i) f << ',' << g17(s.w[i]);
    for (int i = 0; i < 3; ++i) f << ',' << g17(u.force[i]);
    for (int i = 0; i < 3; ++i) f << ',' << g17(u.torque[i]);
    for (int i = 0; i < 3; ++i) f << ',' << g17(p.r_p[i]);
    for (int i = 0; i < 3; ++i) f << ',' << g17(p.v_p[i]);
    f << ',' << g17(r1) << ',' << g17(cum) << '\n';
  }
  f.flush();
  if (!f) throw ConfigError("failed writing " + path.string());
}

}  // namespace dockrl
