#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "dockrl/nn.hpp"
#include "dockrl/policy.hpp"
#include "dockrl/rng.hpp"
#include "dockrl/scenario.hpp"

using namespace dockrl;

namespace {

ChaserState sample_state() {
  ChaserState s;
  s.r = Eigen::Vector3d(-18.25, 1.5, -0.75);
  s.v = Eigen::Vector3d(0.08, -0.02, 0.05);
  s.q = Quat::from_euler_xyz(Eigen::Vector3d(0.3, -0.4, 2.9)).normalized();
  s.w = Eigen::Vector3d(0.01, -0.03, 0.02);
  return s;
}

}  // namespace

TEST_CASE("observation packs position, velocity, quaternion, angular rate in order") {
  const ChaserState s = sample_state();
  const Eigen::VectorXd obs = observation(s);
  REQUIRE(obs.size() == kObservationDim);
  CHECK(obs[0] == s.r[0]);
  CHECK(obs[1] == s.r[1]);
  CHECK(obs[2] == s.r[2]);
  CHECK(obs[3] == s.v[0]);
  CHECK(obs[4] == s.v[1]);
  CHECK(obs[5] == s.v[2]);
  CHECK(obs[6] == s.q.w);
  CHECK(obs[7] == s.q.x);
  CHECK(obs[8] == s.q.y);
  CHECK(obs[9] == s.q.z);
  CHECK(obs[10] == s.w[0]);
  CHECK(obs[11] == s.w[1]);
  CHECK(obs[12] == s.w[2]);
}

TEST_CASE("snapshot factory builds the published layer sizes") {
  Rng rng(2024);
  const PolicySnapshot snap = PolicySnapshot::make(rng);

  REQUIRE(snap.policy.layers.size() == 4);
  CHECK(snap.policy.layers[0].W.rows() == 130);
  CHECK(snap.policy.layers[0].W.cols() == 13);
  CHECK(snap.policy.layers[1].W.rows() == 88);
  CHECK(snap.policy.layers[1].W.cols() == 130);
  CHECK(snap.policy.layers[2].W.rows() == 60);
  CHECK(snap.policy.layers[2].W.cols() == 88);
  CHECK(snap.policy.layers[3].W.rows() == 6);
  CHECK(snap.policy.layers[3].W.cols() == 60);

  REQUIRE(snap.value.layers.size() == 4);
  CHECK(snap.value.layers[0].W.rows() == 130);
  CHECK(snap.value.layers[1].W.rows() == 25);
  CHECK(snap.value.layers[2].W.rows() == 5);
  CHECK(snap.value.layers[3].W.rows() == 1);
  CHECK(snap.value.layers[3].W.cols() == 5);

  CHECK(snap.policy.input_dim() == kObservationDim);
  CHECK(snap.value.input_dim() == kObservationDim);
  CHECK(snap.value.output_dim() == 1);

  REQUIRE(snap.log_var.size() == kActionDim);
  CHECK(snap.log_var.cwiseAbs().maxCoeff() == 0.0);
  CHECK(snap.norm.count == 0.0);
  CHECK(snap.normalize_quat == true);
}

TEST_CASE("policy head width is the action dimension") {
  Rng rng(7);
  const PolicySnapshot snap = PolicySnapshot::make(rng);
  CHECK(snap.policy.output_dim() == kActionDim);
  const Eigen::VectorXd out = forward(snap.policy, Eigen::VectorXd::Zero(kObservationDim));
  CHECK(out.size() == kActionDim);
}

TEST_CASE("snapshot factory is deterministic in the seed") {
  Rng a(99), b(99), c(100);
  const PolicySnapshot sa = PolicySnapshot::make(a);
  const PolicySnapshot sb = PolicySnapshot::make(b);
  const PolicySnapshot sc = PolicySnapshot::make(c);
  for (size_t i = 0; i < sa.policy.layers.size(); ++i) {
    CHECK(sa.policy.layers[i].W == sb.policy.layers[i].W);
    CHECK(sa.policy.layers[i].b == sb.policy.layers[i].b);
  }
  for (size_t i = 0; i < sa.value.layers.size(); ++i) {
    CHECK(sa.value.layers[i].W == sb.value.layers[i].W);
    CHECK(sa.value.layers[i].b == sb.value.layers[i].b);
  }
  CHECK(sa.policy.layers[0].W != sc.policy.layers[0].W);
}

TEST_CASE("fresh normalizer leaves observations untouched") {
  Rng rng(5);
  const PolicySnapshot snap = PolicySnapshot::make(rng);
  const Eigen::VectorXd obs = observation(sample_state());
  const Eigen::VectorXd n = snap.normalize_observation(obs);
  CHECK(n == obs);

  Eigen::MatrixXd batch(kObservationDim, 3);
  batch << obs, 2.0 * obs, -obs;
  CHECK(snap.normalize_observations(batch) == batch);
}

TEST_CASE("quaternion components can be exempted from input normalization") {
  Rng rng(5);
  PolicySnapshot snap = PolicySnapshot::make(rng);

  // Feed the normalizer some spread-out data so mean/std are non-trivial.
  Eigen::MatrixXd data(kObservationDim, 32);
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < kObservationDim; ++i) data(i, j) = rng.uniform(-5.0, 5.0);
  snap.norm.update_batch(data);
  REQUIRE(snap.norm.count == 32.0);

  const Eigen::VectorXd obs = observation(sample_state());

  SUBCASE("normalize_quat=true matches the plain normalizer output") {
    snap.normalize_quat = true;
    const Eigen::VectorXd n = snap.normalize_observation(obs);
    CHECK(n == snap.norm.normalize(obs));
    // And it actually changed the quaternion components.
    CHECK(n.segment<4>(6) != obs.segment<4>(6));
  }

  SUBCASE("normalize_quat=false passes components 6..9 through raw") {
    snap.normalize_quat = false;
    const Eigen::VectorXd n = snap.normalize_observation(obs);
    const Eigen::VectorXd plain = snap.norm.normalize(obs);
    CHECK(n.segment<4>(6) == obs.segment<4>(6));
    CHECK(n.head<6>() == plain.head<6>());
    CHECK(n.tail<3>() == plain.tail<3>());
  }

  SUBCASE("batch path agrees with the single-sample path") {
    for (bool flag : {true, false}) {
      snap.normalize_quat = flag;
      Eigen::MatrixXd batch(kObservationDim, 4);
      batch << obs, 0.5 * obs, -2.0 * obs, Eigen::VectorXd::Ones(kObservationDim);
      const Eigen::MatrixXd nb = snap.normalize_observations(batch);
      for (int j = 0; j < 4; ++j) {
        const Eigen::VectorXd single = snap.normalize_observation(batch.col(j));
        CHECK(nb.col(j) == single);
      }
    }
  }
}

TEST_CASE("mean_action is the policy net applied to the normalized observation") {
  Rng rng(11);
  PolicySnapshot snap = PolicySnapshot::make(rng);
  Eigen::MatrixXd data(kObservationDim, 16);
  for (int j = 0; j < 16; ++j)
    for (int i = 0; i < kObservationDim; ++i) data(i, j) = rng.uniform(-3.0, 3.0);
  snap.norm.update_batch(data);

  const ChaserState s = sample_state();
  for (bool flag : {true, false}) {
    snap.normalize_quat = flag;
    const Eigen::VectorXd expect =
        forward(snap.policy, snap.normalize_observation(observation(s)));
    CHECK(snap.mean_action(s) == expect);
  }
}

TEST_CASE("mean_action with zeroed weights is the zero action") {
  Rng rng(3);
  PolicySnapshot snap = PolicySnapshot::make(rng);
  for (auto& layer : snap.policy.layers) {
    layer.W.setZero();
    layer.b.setZero();
  }
  const Eigen::VectorXd a = snap.mean_action(sample_state());
  REQUIRE(a.size() == kActionDim);
  CHECK(a.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("state_value is the value net applied to the normalized observation") {
  Rng rng(13);
  PolicySnapshot snap = PolicySnapshot::make(rng);
  Eigen::MatrixXd data(kObservationDim, 8);
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < kObservationDim; ++i) data(i, j) = rng.uniform(-2.0, 2.0);
  snap.norm.update_batch(data);

  const ChaserState s = sample_state();
  const Eigen::VectorXd n = snap.normalize_observation(observation(s));
  const double expect = forward(snap.value, n)(0, 0);
  CHECK(snap.state_value(s) == expect);
  CHECK(std::isfinite(snap.state_value(s)));
}
