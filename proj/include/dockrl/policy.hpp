#pragma once

#include <Eigen/Dense>

#include "dockrl/dynamics.hpp"
#include "dockrl/nn.hpp"

namespace dockrl {

inline constexpr int kObservationDim = 13;
inline constexpr int kActionDim = 6;

// Raw 13-vector the networks consume: [r(3), v(3), q(w,x,y,z), omega(3)].
Eigen::VectorXd observation(const ChaserState& s);

// Immutable bundle a rollout works against: actor, critic, learned raw-action
// log-variances, and the input normalizer frozen at batch start. Snapshots
// are value types; copying one is how the trainer isolates updates.
struct PolicySnapshot {
  Mlp policy;  // 13 -> 130 -> 88 -> 60 -> 6
  Mlp value;   // 13 -> 130 -> 25 -> 5 -> 1
  Eigen::VectorXd log_var = Eigen::VectorXd::Zero(kActionDim);  // ln(1) start
  RunningNormalizer norm{kObservationDim};
  // normalize all 13 inputs uniformly by default; false exempts the four
  // quaternion components (already unit scale) and passes them through raw
  bool normalize_quat = true;

  static PolicySnapshot make(Rng& rng);

  Eigen::VectorXd normalize_observation(const Eigen::Ref<const Eigen::VectorXd>& obs) const;
  Eigen::MatrixXd normalize_observations(const Eigen::Ref<const Eigen::MatrixXd>& obs) const;

  // deterministic actor output (the zero-variance test-mode action)
  Eigen::VectorXd mean_action(const ChaserState& s) const;
  double state_value(const ChaserState& s) const;
};

}  // namespace dockrl
