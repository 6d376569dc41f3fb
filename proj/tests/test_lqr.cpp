#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "dockrl/errors.hpp"
#include "dockrl/lqr.hpp"
#include "dockrl/rng.hpp"
#include "dockrl/scenario.hpp"
#include "doctest.h"

using namespace dockrl;

namespace {

bool is_hurwitz(const Eigen::Matrix<double, 3, 6>& k) {
  Matrix6d f = Matrix6d::Zero();
  f.block<3, 3>(0, 3).setIdentity();
  f.block<3, 6>(3, 0) -= k;
  const Eigen::EigenSolver<Matrix6d> es(f);
  return es.eigenvalues().real().maxCoeff() < 0.0;
}

LqrDesign tuned_design(const ScenarioConfig& cfg) {
  static TuneResult cached = tune_gain(cfg);
  return cached.design;
}

}  // namespace

TEST_CASE("design_gain reproduces the analytic scalar solution") {
  const LqrDesign d = design_gain(Matrix6d::Identity(), Eigen::Matrix3d::Identity());
  Eigen::Matrix<double, 3, 6> expected;
  expected << Eigen::Matrix3d::Identity(), std::sqrt(3.0) * Eigen::Matrix3d::Identity();
  CHECK((d.K - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("design_gain matches the per-axis closed form for diagonal weights") {
  // per axis with weights (q1, q2) and effort r: k1 = sqrt(q1/r),
  // k2 = sqrt((q2 + 2*sqrt(q1*r))/r)
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const double q1 = std::exp(rng.uniform(-6.0, 4.0));
    const double q2 = std::exp(rng.uniform(-6.0, 4.0));
    const double r = std::exp(rng.uniform(-3.0, 3.0));
    Vector6d qd;
    qd << q1, q1, q1, q2, q2, q2;
    const LqrDesign d =
        design_gain(Matrix6d(qd.asDiagonal()),
                    Eigen::Matrix3d(r * Eigen::Matrix3d::Identity()));
    const double k1 = std::sqrt(q1 / r);
    const double k2 = std::sqrt((q2 + 2.0 * std::sqrt(q1 * r)) / r);
    for (int i = 0; i < 3; ++i) {
      CHECK(d.K(i, i) == doctest::Approx(k1).epsilon(1e-9));
      CHECK(d.K(i, i + 3) == doctest::Approx(k2).epsilon(1e-9));
      for (int j = 0; j < 6; ++j)
        if (j != i && j != i + 3) CHECK(std::abs(d.K(i, j)) < 1e-9 * std::max(k1, k2));
    }
  }
}

TEST_CASE("scaling Q and R together leaves the gain unchanged") {
  Vector6d qd;
  qd << 1.0, 2.0, 3.0, 40.0, 50.0, 60.0;
  const Eigen::Vector3d rd(1.0, 0.5, 2.0);
  const LqrDesign base = design_gain(Matrix6d(qd.asDiagonal()),
                                     Eigen::Matrix3d(rd.asDiagonal()));
  for (const double alpha : {1e-3, 0.1, 7.5, 40.0}) {
    const LqrDesign scaled =
        design_gain(Matrix6d((alpha * qd).asDiagonal()),
                    Eigen::Matrix3d((alpha * rd).asDiagonal()));
    CHECK((scaled.K - base.K).cwiseAbs().maxCoeff() <
          1e-9 * base.K.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("returned designs pass their own Riccati residual check") {
  const LqrDesign a = design_gain(Matrix6d::Identity(), Eigen::Matrix3d::Identity());
  CHECK(riccati_residual(a.P, a.Q_lqr, a.R_lqr) < 1e-10);

  Vector6d qd;
  qd << 1e-6, 1e-6, 1e-6, 2.5e-3, 2.5e-3, 2.5e-3;
  const LqrDesign b = design_gain(Matrix6d(qd.asDiagonal()), Eigen::Matrix3d::Identity());
  CHECK(riccati_residual(b.P, b.Q_lqr, b.R_lqr) < 1e-10);
}

TEST_CASE("design_gain rejects invalid weight matrices") {
  CHECK_THROWS_AS(design_gain(Matrix6d::Identity(),
                              Eigen::Matrix3d(Eigen::Vector3d(1, 1, 0).asDiagonal())),
                  std::invalid_argument);
  CHECK_THROWS_AS(design_gain(Matrix6d::Identity(),
                              Eigen::Matrix3d(Eigen::Vector3d(1, 1, -1).asDiagonal())),
                  std::invalid_argument);
  Matrix6d neg = Matrix6d::Identity();
  neg(5, 5) = -1.0;
  CHECK_THROWS_AS(design_gain(neg, Eigen::Matrix3d::Identity()), std::invalid_argument);
  Matrix6d asym = Matrix6d::Identity();
  asym(0, 1) = 0.3;
  CHECK_THROWS_AS(design_gain(asym, Eigen::Matrix3d::Identity()), std::invalid_argument);
}

TEST_CASE("closed loop is Hurwitz for designed gains") {
  CHECK(is_hurwitz(design_gain(Matrix6d::Identity(), Eigen::Matrix3d::Identity()).K));
  Vector6d qd;
  qd << 3.0, 1.0, 2.0, 10.0, 20.0, 5.0;
  CHECK(is_hurwitz(design_gain(Matrix6d(qd.asDiagonal()), Eigen::Matrix3d::Identity()).K));
}

TEST_CASE("reference_accel is zero at the fixed point and exactly linear") {
  ScenarioConfig cfg;
  const LqrDesign d = tuned_design(cfg);

  const Eigen::Vector3d fixed_point = d.r_target + d.origin_offset;
  CHECK(reference_accel(d, fixed_point, Eigen::Vector3d::Zero()).norm() == 0.0);

  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Vector3d dr1, dv1, dr2, dv2;
    for (int i = 0; i < 3; ++i) {
      dr1[i] = rng.uniform(-20.0, 20.0);
      dv1[i] = rng.uniform(-1.0, 1.0);
      dr2[i] = rng.uniform(-20.0, 20.0);
      dv2[i] = rng.uniform(-1.0, 1.0);
    }
    const Eigen::Vector3d sum = reference_accel(d, fixed_point + dr1 + dr2, dv1 + dv2);
    const Eigen::Vector3d parts =
        reference_accel(d, fixed_point + dr1, dv1) + reference_accel(d, fixed_point + dr2, dv2);
    CHECK((sum - parts).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, parts.norm()));
  }
}

TEST_CASE("tuner hits the arrival window on the nominal initial condition") {
  ScenarioConfig cfg;
  const TuneResult tuned = tune_gain(cfg);
  CHECK(tuned.arrival_s >= 103.0);
  CHECK(tuned.arrival_s <= 107.0);
  CHECK(tuned.alpha > 0.0);
  CHECK(tuned.evaluations <= 200);
  CHECK(int(tuned.trace.size()) == tuned.evaluations);
  CHECK(riccati_residual(tuned.design.P, tuned.design.Q_lqr, tuned.design.R_lqr) < 1e-8);
  CHECK(is_hurwitz(tuned.design.K));
  CHECK(tuned.design.r_target.x() == doctest::Approx(-7.729).epsilon(1e-12));
  CHECK(tuned.design.r_target.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(tuned.design.origin_offset.x() == 3.0);
}

TEST_CASE("nominal reference approaches monotonically and crosses with positive speed") {
  ScenarioConfig cfg;
  const LqrDesign d = tuned_design(cfg);
  const ReferenceTrajectory traj = simulate_reference(
      d, cfg.ic_test.r_center_m, Eigen::Vector3d::Zero(), cfg.dt_s, 250.0);
  REQUIRE(traj.arrived);
  CHECK(traj.arrival_s >= 95.0);
  CHECK(traj.arrival_s <= 115.0);

  const size_t arrival_idx = size_t(traj.arrival_s / cfg.dt_s);
  for (size_t i = 0; i + 1 <= arrival_idx; ++i) {
    CHECK(traj.samples[i + 1].r.x() > traj.samples[i].r.x());
    CHECK(std::abs(traj.samples[i].r.y()) < 1e-9);
    CHECK(std::abs(traj.samples[i].r.z()) < 1e-9);
  }
  CHECK(traj.samples[arrival_idx].v.x() > 0.0);
  CHECK(traj.samples.back().v.x() > 0.0);  // offset keeps the terminal drift positive
}

TEST_CASE("arrival happens at t=0 when starting on target") {
  ScenarioConfig cfg;
  const LqrDesign d = tuned_design(cfg);
  const ReferenceTrajectory traj =
      simulate_reference(d, d.r_target, Eigen::Vector3d::Zero(), 1.0, 10.0);
  CHECK(traj.arrived);
  CHECK(traj.arrival_s == 0.0);
}

TEST_CASE("non-arrival is reported, not thrown") {
  ScenarioConfig cfg;
  Vector6d qd;
  qd << 1e-12, 1e-12, 1e-12, 2.5e-9, 2.5e-9, 2.5e-9;
  LqrDesign weak = design_gain(Matrix6d(qd.asDiagonal()), Eigen::Matrix3d::Identity());
  weak.r_target = tuned_design(cfg).r_target;
  const ReferenceTrajectory traj = simulate_reference(
      weak, cfg.ic_test.r_center_m, Eigen::Vector3d::Zero(), cfg.dt_s, 250.0);
  CHECK(!traj.arrived);
  CHECK(traj.samples.size() == 251);
}

TEST_CASE("arrival time is monotone in the position weight over a 5-point sweep") {
  ScenarioConfig cfg;
  const TuneResult tuned = tune_gain(cfg);
  const LqrTuning defaults;
  double prev = std::numeric_limits<double>::infinity();
  for (const double mult : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    Vector6d qd;
    const double qp = tuned.alpha * defaults.base_q_pos * mult;
    const double qv = tuned.alpha * defaults.base_q_vel;
    qd << qp, qp, qp, qv, qv, qv;
    LqrDesign d = design_gain(Matrix6d(qd.asDiagonal()), Eigen::Matrix3d::Identity());
    d.r_target = tuned.design.r_target;
    const ReferenceTrajectory traj = simulate_reference(
        d, cfg.ic_test.r_center_m, Eigen::Vector3d::Zero(), cfg.dt_s, 400.0);
    REQUIRE(traj.arrived);
    CHECK(traj.arrival_s <= prev);
    prev = traj.arrival_s;
  }
}

TEST_CASE("closed loop contracts every training-range initial condition by 250 s") {
  // A two-pole-per-axis loop whose arrival is pinned at ~105 s cannot do much
  // better than ~7e-3 contraction by 250 s (critical damping is the optimum),
  // so the bar is 1e-2 rather than a tighter figure.
  ScenarioConfig cfg;
  const LqrDesign d = tuned_design(cfg);
  const Eigen::Vector3d fixed_point = d.r_target + d.origin_offset;

  std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> ics;
  for (int bits = 0; bits < 8; ++bits) {
    Eigen::Vector3d r = cfg.ic_train.r_center_m;
    for (int i = 0; i < 3; ++i)
      r[i] += ((bits >> i) & 1 ? 1.0 : -1.0) * cfg.ic_train.r_halfwidth_m[i];
    ics.emplace_back(r, Eigen::Vector3d::Zero());
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i)
      v[i] = ((bits >> i) & 1 ? 1.0 : -1.0) * cfg.ic_train.v_halfwidth_ms[i];
    ics.emplace_back(r, v);
  }
  ics.emplace_back(cfg.ic_train.r_center_m, Eigen::Vector3d::Zero());

  for (const auto& [r0, v0] : ics) {
    Vector6d e0;
    e0 << r0 - fixed_point, v0;
    const ReferenceTrajectory traj = simulate_reference(d, r0, v0, cfg.dt_s, 250.0);
    const ReferenceSample& last = traj.samples.back();
    Vector6d ef;
    ef << last.r - fixed_point, last.v;
    CHECK(ef.norm() < 1e-2 * e0.norm());
  }
}

TEST_CASE("reference CSV round trips through text") {
  ScenarioConfig cfg;
  const LqrDesign d = tuned_design(cfg);
  const ReferenceTrajectory traj = simulate_reference(
      d, cfg.ic_test.r_center_m, Eigen::Vector3d(0.05, -0.03, 0.01), cfg.dt_s, 20.0);
  const auto path = std::filesystem::temp_directory_path() / "dockrl_ref_test.csv";
  write_reference_csv(traj, path);

  std::ifstream f(path);
  REQUIRE(f.good());
  std::string line;
  std::getline(f, line);
  CHECK(line == "t_s,r_x,r_y,r_z,v_x,v_y,v_z,a_x,a_y,a_z");
  size_t rows = 0;
  while (std::getline(f, line)) {
    std::vector<double> vals;
    size_t pos = 0;
    while (pos <= line.size()) {
      const size_t comma = line.find(',', pos);
      const std::string tok = line.substr(pos, comma == std::string::npos ? comma : comma - pos);
      vals.push_back(std::stod(tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    REQUIRE(vals.size() == 10);
    const ReferenceSample& s = traj.samples[rows];
    CHECK(vals[0] == s.t);
    for (int i = 0; i < 3; ++i) {
      CHECK(vals[1 + i] == s.r[i]);
      CHECK(vals[4 + i] == s.v[i]);
      CHECK(vals[7 + i] == s.a[i]);
    }
    ++rows;
  }
  CHECK(rows == traj.samples.size());
  std::filesystem::remove(path);
}

TEST_CASE("gain files round trip exactly and loading validates content") {
  ScenarioConfig cfg;
  const TuneResult tuned = tune_gain(cfg);
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "dockrl_gain_test.json";
  save_lqr_design(tuned.design, &tuned, path);

  const LqrDesign loaded = load_lqr_design(path);
  CHECK((loaded.K - tuned.design.K).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.P - tuned.design.P).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded.r_target == tuned.design.r_target);
  CHECK(loaded.origin_offset == tuned.design.origin_offset);

  SUBCASE("malformed json is a config error") {
    const auto bad = dir / "dockrl_gain_bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_AS(load_lqr_design(bad), ConfigError);
    std::filesystem::remove(bad);
  }
  SUBCASE("missing file is a config error") {
    CHECK_THROWS_AS(load_lqr_design(dir / "dockrl_gain_missing.json"), ConfigError);
  }
  SUBCASE("a tampered Riccati solution is rejected") {
    LqrDesign tampered = tuned.design;
    tampered.P *= 1.5;
    const auto bad = dir / "dockrl_gain_stale.json";
    save_lqr_design(tampered, nullptr, bad);
    CHECK_THROWS_AS(load_lqr_design(bad), NumericalError);
    std::filesystem::remove(bad);
  }
  SUBCASE("a gain inconsistent with its P is rejected") {
    LqrDesign tampered = tuned.design;
    tampered.K *= 1.02;
    const auto bad = dir / "dockrl_gain_mismatch.json";
    save_lqr_design(tampered, nullptr, bad);
    CHECK_THROWS_AS(load_lqr_design(bad), NumericalError);
    std::filesystem::remove(bad);
  }
  std::filesystem::remove(path);
}
