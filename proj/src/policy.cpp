#include "dockrl/policy.hpp"

namespace dockrl {

Eigen::VectorXd observation(const ChaserState& s) {
  Eigen::VectorXd obs(kObservationDim);
  obs << s.r, s.v, s.q.w, s.q.x, s.q.y, s.q.z, s.w;
  return obs;
}

PolicySnapshot PolicySnapshot::make(Rng& rng) {
  PolicySnapshot snap;
  snap.policy = Mlp::make({kObservationDim, 130, 88, 60, kActionDim}, rng);
  snap.value = Mlp::make({kObservationDim, 130, 25, 5, 1}, rng);
  return snap;
}

Eigen::VectorXd PolicySnapshot::normalize_observation(
    const Eigen::Ref<const Eigen::VectorXd>& obs) const {
  Eigen::VectorXd out = norm.normalize(obs);
  if (!normalize_quat && norm.count > 0.0) out.segment<4>(6) = obs.segment<4>(6);
  return out;
}

Eigen::MatrixXd PolicySnapshot::normalize_observations(
    const Eigen::Ref<const Eigen::MatrixXd>& obs) const {
  Eigen::MatrixXd out = norm.normalize_batch(obs);
  if (!normalize_quat && norm.count > 0.0) out.middleRows<4>(6) = obs.middleRows<4>(6);
  return out;
}

Eigen::VectorXd PolicySnapshot::mean_action(const ChaserState& s) const {
  return forward(policy, normalize_observation(observation(s)));
}

double PolicySnapshot::state_value(const ChaserState& s) const {
  return forward(value, normalize_observation(observation(s)))(0, 0);
}

}  // namespace dockrl
