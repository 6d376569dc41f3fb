#include "dockrl/eval.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dockrl/errors.hpp"
#include "dockrl/lqr.hpp"
#include "dockrl/quat.hpp"

using namespace dockrl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "dockrl_eval_tests";
  fs::create_directories(dir);
  return dir;
}

LqrDesign sample_design() {
  Vector6d q;
  q << 2e-7, 2e-7, 2e-7, 5e-4, 5e-4, 5e-4;
  LqrDesign d = design_gain(Matrix6d(q.asDiagonal()), Eigen::Matrix3d::Identity());
  d.origin_offset = Eigen::Vector3d(3.0, 0.0, 0.0);
  d.r_target = make_docked_state(ScenarioConfig{}).r;
  return d;
}

RolloutContext test_ctx() {
  return RolloutContext::make(ScenarioConfig{}, RewardWeights{}, sample_design(),
                              /*training=*/false);
}

PolicySnapshot fresh_snapshot(uint64_t seed = 5) {
  Rng rng(seed);
  return PolicySnapshot::make(rng);
}

PolicySnapshot zero_snapshot() {
  PolicySnapshot snap = fresh_snapshot();
  for (auto& l : snap.policy.layers) {
    l.W.setZero();
    l.b.setZero();
  }
  return snap;
}

// Minimal record: given per-step raw actions and a state trail.
EpisodeRecord synthetic_record(const std::vector<ChaserState>& states,
                               const Eigen::MatrixXd& actions) {
  EpisodeRecord ep;
  const int steps = int(states.size()) - 1;
  REQUIRE(actions.cols() == steps);
  ep.states = states;
  ep.obs = Eigen::MatrixXd::Zero(kObservationDim, steps);
  ep.actions = actions;
  ep.logprobs = Eigen::VectorXd::Zero(steps);
  ep.r1 = Eigen::VectorXd::Zero(steps);
  ep.r2 = Eigen::VectorXd::Zero(steps);
  ep.values = Eigen::VectorXd::Zero(steps);
  return ep;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(bool(f));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(bool(f));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

TrajectoryStats random_stats(Rng& rng) {
  TrajectoryStats st;
  for (const StatField& f : stat_fields()) st.*(f.member) = rng.uniform(0.0, 100.0);
  st.final_vx_ms = rng.uniform(-1.0, 1.0);  // the one signed field
  st.docked = rng.uniform01() < 0.5;
  st.collided = rng.uniform01() < 0.2;
  return st;
}

}  // namespace

TEST_CASE("expenditure: zero commands cost nothing") {
  const ScenarioConfig cfg;
  std::vector<ChaserState> states(6);
  const EpisodeRecord ep = synthetic_record(states, Eigen::MatrixXd::Zero(6, 5));
  const auto [thrust, torque] = expenditure(ep, cfg);
  CHECK(thrust == 0.0);
  CHECK(torque == 0.0);
}

TEST_CASE("expenditure: saturated x thrust for 10 steps integrates the force limit") {
  const ScenarioConfig cfg;  // f_max 790.80 N per axis, dt 1 s
  std::vector<ChaserState> states(11);
  Eigen::MatrixXd actions = Eigen::MatrixXd::Zero(6, 10);
  actions.row(0).setOnes();
  const EpisodeRecord ep = synthetic_record(states, actions);
  const auto [thrust, torque] = expenditure(ep, cfg);
  CHECK(thrust == doctest::Approx(7908.0).epsilon(1e-12));
  CHECK(torque == 0.0);

  // commands beyond the raw unit range clamp to the same physical force
  Eigen::MatrixXd big = actions;
  big.row(0) *= 7.5;
  const auto [thrust_clamped, torque_clamped] =
      expenditure(synthetic_record(states, big), cfg);
  CHECK(thrust_clamped == thrust);
  CHECK(torque_clamped == 0.0);
}

TEST_CASE("expenditure: doubling dt doubles the integral exactly") {
  ScenarioConfig cfg;
  std::vector<ChaserState> states(8);
  Eigen::MatrixXd actions(6, 7);
  Rng rng(77);
  for (int c = 0; c < 7; ++c)
    for (int r = 0; r < 6; ++r) actions(r, c) = rng.uniform(-1.0, 1.0);
  const EpisodeRecord ep = synthetic_record(states, actions);
  const auto [t1, q1] = expenditure(ep, cfg);
  cfg.dt_s = 2.0;
  const auto [t2, q2] = expenditure(ep, cfg);
  CHECK(t2 == 2.0 * t1);
  CHECK(q2 == 2.0 * q1);
  CHECK(t1 > 0.0);
  CHECK(q1 > 0.0);
}

TEST_CASE("trajectory_stats: exact docked final state scores zero errors") {
  const RolloutContext ctx = test_ctx();
  ChaserState fin = make_docked_state(ctx.scenario);
  std::vector<ChaserState> states = {fin, fin};
  EpisodeRecord ep = synthetic_record(states, Eigen::MatrixXd::Zero(6, 1));
  ep.docked = true;
  const TrajectoryStats st = trajectory_stats(ep, ctx);
  CHECK(st.length_s == 1.0);
  CHECK(st.pos_err_y_m == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(st.pos_err_z_m == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(st.vel_err_y_ms == 0.0);
  CHECK(st.vel_err_z_ms == 0.0);
  CHECK(st.final_vx_ms == doctest::Approx(ctx.scenario.docking.v_px_goal_ms).epsilon(1e-12));
  CHECK(st.att_err_deg == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(st.rate_err_x_degs == 0.0);
  CHECK(st.docked);
  CHECK_FALSE(st.collided);
}

TEST_CASE("trajectory_stats: perturbations show up in the right fields") {
  const RolloutContext ctx = test_ctx();
  const ChaserState base = make_docked_state(ctx.scenario);

  // translation-only perturbation: with zero rates and the goal attitude the
  // port velocity equals the vehicle velocity, so the deltas map one to one
  ChaserState fin = base;
  fin.r += Eigen::Vector3d(0.0, 0.05, -0.07);
  fin.v += Eigen::Vector3d(-0.02, 0.003, -0.004);
  std::vector<ChaserState> states = {base, fin};
  const TrajectoryStats st =
      trajectory_stats(synthetic_record(states, Eigen::MatrixXd::Zero(6, 1)), ctx);
  CHECK(st.pos_err_y_m == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(st.pos_err_z_m == doctest::Approx(0.07).epsilon(1e-9));
  CHECK(st.vel_err_y_ms == doctest::Approx(0.003).epsilon(1e-9));
  CHECK(st.vel_err_z_ms == doctest::Approx(0.004).epsilon(1e-9));
  CHECK(st.final_vx_ms ==
        doctest::Approx(ctx.scenario.docking.v_px_goal_ms - 0.02).epsilon(1e-9));

  // rotation-only perturbation: attitude and rate errors, independent of the
  // translation fields' reference point
  ChaserState rot = base;
  rot.q = (rot.q * Quat::from_euler_xyz({deg2rad(4.0), 0.0, 0.0})).normalized();
  rot.w = Eigen::Vector3d(deg2rad(0.5), deg2rad(-0.25), deg2rad(0.125));
  std::vector<ChaserState> states2 = {base, rot};
  const TrajectoryStats st2 =
      trajectory_stats(synthetic_record(states2, Eigen::MatrixXd::Zero(6, 1)), ctx);
  CHECK(st2.rate_err_x_degs == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(st2.rate_err_y_degs == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(st2.rate_err_z_degs == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(st2.att_err_deg == doctest::Approx(4.0).epsilon(1e-9));

  // attitude error is an axis-angle and ignores the quaternion cover
  ChaserState flipped = rot;
  flipped.q = Quat{-rot.q.w, -rot.q.x, -rot.q.y, -rot.q.z};
  std::vector<ChaserState> states3 = {base, flipped};
  const TrajectoryStats st3 =
      trajectory_stats(synthetic_record(states3, Eigen::MatrixXd::Zero(6, 1)), ctx);
  CHECK(st3.att_err_deg == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("aggregate_report: hand-checked means, maxima and counts") {
  TrajectoryStats a, b, c;
  a.length_s = 10.0;
  a.thrust_n = 5.0;
  a.docked = true;
  b.length_s = 20.0;
  b.thrust_n = 3.0;
  b.docked = true;
  b.collided = true;
  c.length_s = 30.0;
  c.thrust_n = 100.0;
  c.docked = false;
  const MonteCarloReport rep = aggregate_report({a, b, c});
  CHECK(rep.trials == 3);
  CHECK(rep.docked == 2);
  CHECK(rep.collided == 1);
  CHECK(rep.mean_success.length_s == 15.0);
  CHECK(rep.max_success.length_s == 20.0);
  CHECK(rep.mean_success.thrust_n == 4.0);
  CHECK(rep.max_success.thrust_n == 5.0);
  CHECK(rep.mean_all.length_s == 20.0);
  CHECK(rep.max_all.length_s == 30.0);
  CHECK(rep.max_all.thrust_n == 100.0);
}

TEST_CASE("aggregate_report: mean never exceeds max, field by field") {
  Rng rng(99);
  std::vector<TrajectoryStats> trials;
  for (int i = 0; i < 100; ++i) trials.push_back(random_stats(rng));
  const MonteCarloReport rep = aggregate_report(trials);
  REQUIRE(rep.docked > 0);
  for (const StatField& f : stat_fields()) {
    CHECK(rep.mean_all.*(f.member) <=
          rep.max_all.*(f.member) + 1e-12 * std::abs(rep.max_all.*(f.member)) + 1e-300);
    CHECK(rep.mean_success.*(f.member) <=
          rep.max_success.*(f.member) + 1e-12 * std::abs(rep.max_success.*(f.member)) +
              1e-300);
  }
}

TEST_CASE("aggregate_report: concatenating disjoint trial sets matches the union") {
  Rng rng(123);
  std::vector<TrajectoryStats> all;
  for (int i = 0; i < 10; ++i) all.push_back(random_stats(rng));
  const std::vector<TrajectoryStats> first(all.begin(), all.begin() + 4);
  const std::vector<TrajectoryStats> second(all.begin() + 4, all.end());
  std::vector<TrajectoryStats> concat = first;
  concat.insert(concat.end(), second.begin(), second.end());
  const MonteCarloReport u = aggregate_report(all);
  const MonteCarloReport v = aggregate_report(concat);
  CHECK(u.trials == v.trials);
  CHECK(u.docked == v.docked);
  for (const StatField& f : stat_fields()) {
    CHECK(u.mean_all.*(f.member) == v.mean_all.*(f.member));
    CHECK(u.max_all.*(f.member) == v.max_all.*(f.member));
    CHECK(u.mean_success.*(f.member) == v.mean_success.*(f.member));
    CHECK(u.max_success.*(f.member) == v.max_success.*(f.member));
  }
}

TEST_CASE("evaluation_episode: deterministic per trial index") {
  const RolloutContext ctx = test_ctx();
  const PolicySnapshot snap = fresh_snapshot();
  const EpisodeRecord a = evaluation_episode(snap, ctx, 42, 3);
  const EpisodeRecord b = evaluation_episode(snap, ctx, 42, 3);
  REQUIRE(a.steps() == b.steps());
  CHECK(a.actions == b.actions);
  CHECK(a.r1 == b.r1);
  for (size_t i = 0; i < a.states.size(); ++i) {
    CHECK(a.states[i].r == b.states[i].r);
    CHECK(a.states[i].q.coeffs() == b.states[i].q.coeffs());
  }
  // a different trial draws a different initial condition
  const EpisodeRecord c = evaluation_episode(snap, ctx, 42, 4);
  CHECK(a.states[0].r != c.states[0].r);
}

TEST_CASE("monte_carlo: counts, time limit, and guards") {
  const RolloutContext ctx = test_ctx();
  const PolicySnapshot snap = fresh_snapshot();
  const MonteCarloReport rep = monte_carlo(snap, ctx, 5, 7);
  CHECK(rep.trials == 5);
  REQUIRE(rep.per_trial.size() == 5);
  int docked = 0, collided = 0;
  for (const auto& st : rep.per_trial) {
    CHECK(st.length_s <= ctx.scenario.t_limit_test_s);
    docked += st.docked ? 1 : 0;
    collided += st.collided ? 1 : 0;
  }
  CHECK(rep.docked == docked);
  CHECK(rep.collided == collided);

  RolloutContext train_ctx = ctx;
  train_ctx.training = true;
  CHECK_THROWS_AS(monte_carlo(snap, train_ctx, 1, 7), std::invalid_argument);
  CHECK_THROWS_AS(monte_carlo(snap, ctx, -1, 7), std::invalid_argument);
}

TEST_CASE("monte_carlo: worker count does not change results") {
  const RolloutContext ctx = test_ctx();
  const PolicySnapshot snap = fresh_snapshot();
  const MonteCarloReport a = monte_carlo(snap, ctx, 6, 11, 1);
  const MonteCarloReport b = monte_carlo(snap, ctx, 6, 11, 3);
  REQUIRE(a.per_trial.size() == b.per_trial.size());
  for (size_t i = 0; i < a.per_trial.size(); ++i)
    for (const StatField& f : stat_fields())
      CHECK(a.per_trial[i].*(f.member) == b.per_trial[i].*(f.member));
}

TEST_CASE("monte_carlo report: n=0 flags no-data and reports are byte-deterministic") {
  const RolloutContext ctx = test_ctx();
  const PolicySnapshot snap = fresh_snapshot();

  const MonteCarloReport empty = monte_carlo(snap, ctx, 0, 7);
  std::ostringstream os;
  write_report(empty, os);
  CHECK(os.str().find("success_fraction,no-data") != std::string::npos);
  CHECK(os.str().find("reference_mean_length_s,116.44") != std::string::npos);

  const fs::path p1 = temp_dir() / "report_a.txt";
  const fs::path p2 = temp_dir() / "report_b.txt";
  save_report(monte_carlo(snap, ctx, 4, 7), p1);
  save_report(monte_carlo(snap, ctx, 4, 7), p2);
  CHECK(read_file(p1) == read_file(p2));
  CHECK(read_file(p1).find("section,all_trials") != std::string::npos);
}

TEST_CASE("export_trajectory: fencepost, terminal row, and full-precision round trip") {
  const RolloutContext ctx = test_ctx();
  const PolicySnapshot snap = fresh_snapshot();
  const EpisodeRecord ep = evaluation_episode(snap, ctx, 3, 0);
  REQUIRE(ep.steps() >= 2);
  const fs::path p = temp_dir() / "traj.csv";
  export_trajectory(ep, ctx, p);

  const auto rows = read_csv(p);
  REQUIRE(int(rows.size()) == ep.steps() + 2);  // header + steps + terminal row
  REQUIRE(rows[0].size() == 31);

  double cum = 0.0;
  for (int t = 0; t <= ep.steps(); ++t) {
    const auto& row = rows[size_t(t) + 1];
    REQUIRE(row.size() == 31);
    CHECK(std::strtod(row[0].c_str(), nullptr) == t * ctx.scenario.dt_s);
    const ChaserState& s = ep.states[size_t(t)];
    for (int i = 0; i < 3; ++i) {
      CHECK(std::strtod(row[1 + i].c_str(), nullptr) == s.r[i]);
      CHECK(std::strtod(row[4 + i].c_str(), nullptr) == s.v[i]);
      CHECK(std::strtod(row[14 + i].c_str(), nullptr) == s.w[i]);
    }
    CHECK(std::strtod(row[7].c_str(), nullptr) == s.q.w);
    CHECK(std::strtod(row[8].c_str(), nullptr) == s.q.x);
    CHECK(std::strtod(row[9].c_str(), nullptr) == s.q.y);
    CHECK(std::strtod(row[10].c_str(), nullptr) == s.q.z);

    ControlAction u;
    double r1 = 0.0;
    if (t < ep.steps()) {
      u = scale_action(ep.actions.col(t), ctx.scenario.f_max_n, ctx.scenario.l_max_nm);
      r1 = ep.r1[t];
    }
    for (int i = 0; i < 3; ++i) {
      CHECK(std::strtod(row[17 + i].c_str(), nullptr) == u.force[i]);
      CHECK(std::strtod(row[20 + i].c_str(), nullptr) == u.torque[i]);
    }
    const PortState port =
        relative_port_state(s, ctx.scenario.r_port_body_m, ctx.scenario.r_target_port_m,
                            ctx.scenario.port_rate_in_inertial);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::strtod(row[23 + i].c_str(), nullptr) == port.r_p[i]);
      CHECK(std::strtod(row[26 + i].c_str(), nullptr) == port.v_p[i]);
    }
    CHECK(std::strtod(row[29].c_str(), nullptr) == r1);
    if (t > 0) cum += ep.r1[t - 1] + ep.r2[t - 1];
    CHECK(std::strtod(row[30].c_str(), nullptr) == cum);
  }
}

TEST_CASE("export_trajectory: docked records are re-verified") {
  const RolloutContext ctx = test_ctx();
  const PolicySnapshot snap = zero_snapshot();
  Rng rng(1);
  EpisodeRecord ep = rollout(snap, ctx, make_docked_state(ctx.scenario), rng, false);
  REQUIRE(ep.docked);
  export_trajectory(ep, ctx, temp_dir() / "docked.csv");  // passes the check

  EpisodeRecord tampered = ep;
  tampered.states.back().r[0] += 10.0;
  CHECK_THROWS_AS(export_trajectory(tampered, ctx, temp_dir() / "tampered.csv"),
                  NumericalError);
  CHECK_THROWS_AS(export_trajectory(ep, ctx, temp_dir() / "no_such_dir" / "x.csv"),
                  ConfigError);
}

TEST_CASE("export_trajectory: agrees with the reference-trajectory writer") {
  const LqrDesign d = sample_design();
  const ScenarioConfig cfg;
  const ReferenceTrajectory traj = simulate_reference(
      d, cfg.ic_test.r_center_m, cfg.ic_test.v_center_ms, cfg.dt_s, 40.0);
  REQUIRE(traj.samples.size() >= 2);

  // wrap the reference samples in an episode: position/velocity trail with
  // the goal attitude held and no commands
  std::vector<ChaserState> states;
  for (const auto& s : traj.samples) {
    ChaserState x;
    x.r = s.r;
    x.v = s.v;
    x.q = RewardWeights{}.q_des;
    x.w = Eigen::Vector3d::Zero();
    states.push_back(x);
  }
  const int steps = int(states.size()) - 1;
  const EpisodeRecord ep = synthetic_record(states, Eigen::MatrixXd::Zero(6, steps));

  const fs::path traj_csv = temp_dir() / "episode_ref.csv";
  const fs::path ref_csv = temp_dir() / "reference.csv";
  const RolloutContext ctx = test_ctx();
  export_trajectory(ep, ctx, traj_csv);
  write_reference_csv(traj, ref_csv);

  const auto erows = read_csv(traj_csv);
  const auto rrows = read_csv(ref_csv);
  REQUIRE(erows.size() == rrows.size());
  // overlapping columns (t, r, v) must agree cell-for-cell as written text
  for (size_t i = 1; i < erows.size(); ++i)
    for (int c = 0; c < 7; ++c) CHECK(erows[i][size_t(c)] == rrows[i][size_t(c)]);
}
