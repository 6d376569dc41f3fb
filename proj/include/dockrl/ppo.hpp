#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dockrl/dynamics.hpp"
#include "dockrl/lqr.hpp"
#include "dockrl/nn.hpp"
#include "dockrl/policy.hpp"
#include "dockrl/reward.hpp"
#include "dockrl/rng.hpp"
#include "dockrl/scenario.hpp"

namespace dockrl {

// Learning-loop hyperparameters. The clip parameter and policy learning rate
// are adapted online by adapt_kl(); the value-net rate is fixed.
struct PpoHyperparams {
  double epsilon = 0.2;       // clip parameter, in (0,1)
  double lr_policy = 3e-4;    // Adam step size for policy net + log_var
  double lr_value = 1e-3;     // Adam step size for value net
  double kl_target = 0.001;   // desired mean KL(old||new) per update
  int batch_episodes = 128;   // episodes collected per update
  int epochs_per_update = 10;
  int minibatch_size = 4096;  // transitions per Adam step
  bool normalize_advantages = true;
  bool normalize_quat_inputs = true;  // passed to PolicySnapshot at init
  // Initial ln(action variance) in scaled action units. 0 means unit standard
  // deviation, i.e. exploration noise on the order of the full actuator range;
  // lower it for problems where a gentler search is enough.
  double init_log_var = 0.0;

  // Throws ConfigError when any value is out of range.
  void validate() const;
};

// One simulated episode. All per-step arrays have length steps(); states has
// one extra entry (the state after the final transition). r2 is nonzero only
// at the last step of a docked episode.
struct EpisodeRecord {
  std::vector<ChaserState> states;  // steps()+1 entries
  Eigen::MatrixXd obs;              // 13 x T raw observations at decision times
  Eigen::MatrixXd actions;          // 6 x T raw (pre-scaling) actions
  Eigen::VectorXd logprobs;         // T, under the acting policy
  Eigen::VectorXd r1;               // T, shaping reward
  Eigen::VectorXd r2;               // T, terminal bonus
  Eigen::VectorXd values;           // T, state-value estimates at decision times
  bool docked = false;
  bool collided = false;  // entered the collision box at any visited state
  // Shaping decomposition accumulated over the episode (each <= 0).
  double sum_lqr = 0.0;
  double sum_attitude = 0.0;
  double sum_control = 0.0;
  double sum_collision = 0.0;

  int steps() const { return static_cast<int>(r1.size()); }
  double score() const { return r1.sum() + r2.sum(); }
};

// Everything a rollout needs besides the policy. `training` selects the
// 150 s training time limit; otherwise the 250 s testing limit applies.
struct RolloutContext {
  ScenarioConfig scenario;
  RewardWeights reward;
  LqrDesign lqr;
  double r_col = 0.0;  // collision-penalty scale, cached from the geometry
  bool training = true;

  static RolloutContext make(const ScenarioConfig& scenario, const RewardWeights& reward,
                             const LqrDesign& lqr, bool training);
};

// Simulates one episode from x0 at dt = scenario.dt_s. When stochastic, raw
// actions are sampled from the policy Gaussian (consuming rng); otherwise the
// mean action is used and rng is never touched. Terminates on dock success or
// at the time limit.
EpisodeRecord rollout(const PolicySnapshot& snap, const RolloutContext& ctx,
                      const ChaserState& x0, Rng& rng, bool stochastic);

struct ReturnsAdvantages {
  Eigen::VectorXd returns;     // dual-discount return per step
  Eigen::VectorXd advantages;  // return - value (un-normalized)
};

// return_t = sum_{k>=t} gamma1^(k-t) r1_k + gamma2^(k-t) r2_k.
ReturnsAdvantages returns_and_advantages(const EpisodeRecord& ep, double gamma1,
                                         double gamma2);

// Flat transition store for the update phase, episodes concatenated in order.
struct Batch {
  Eigen::MatrixXd obs;         // 13 x N raw
  Eigen::MatrixXd actions;     // 6 x N raw
  Eigen::VectorXd returns;     // N
  Eigen::VectorXd advantages;  // N, normalized here when requested
  std::vector<int> episode_starts;  // column index of each episode's first step

  int size() const { return static_cast<int>(returns.size()); }
};

// Concatenates episodes and computes dual-discount returns/advantages. When
// normalize_advantages, advantages are shifted/scaled batch-wise to zero mean
// and unit standard deviation (guarded by +1e-8 in the denominator).
Batch assemble_batch(const std::vector<EpisodeRecord>& episodes, double gamma1,
                     double gamma2, bool normalize_advantages);

// Clipped-ratio objective for one transition: min(r*A, clip(r,1-eps,1+eps)*A).
double ppo_surrogate(double ratio, double advantage, double epsilon);

// Mean clipped surrogate J over a minibatch plus its descent gradient -dJ
// with respect to [net params; log_var] (size param_count + action dim).
// Exposed so the gradient path used by update() can be validated against
// finite differences. x holds normalized observations one per column.
struct SurrogateGradient {
  double objective = 0.0;         // J, ascent target
  Eigen::VectorXd grad;           // -dJ/d[params; log_var]
  double max_ratio_dev = 0.0;     // max |ratio - 1| over the minibatch
  Eigen::MatrixXd means;          // policy means, one column per sample
};
SurrogateGradient policy_surrogate_gradient(const Mlp& policy, const Eigen::VectorXd& log_var,
                                            const Eigen::MatrixXd& x,
                                            const Eigen::MatrixXd& actions,
                                            const Eigen::VectorXd& advantages,
                                            const Eigen::VectorXd& lp_old, double epsilon);

// Mean closed-form KL(old || new) between diagonal Gaussians with per-column
// means and shared per-dimension log variances.
double gaussian_kl_mean(const Eigen::MatrixXd& mean_old, const Eigen::VectorXd& log_var_old,
                        const Eigen::MatrixXd& mean_new, const Eigen::VectorXd& log_var_new);

struct UpdateDiagnostics {
  double kl = 0.0;          // full-batch mean KL(old||new) after the last epoch run
  double value_loss = 0.0;  // 0.5 * mean (v - G)^2 after the last epoch run
  int epochs_run = 0;
  bool early_stopped = false;  // KL exceeded 4 * kl_target
  bool aborted = false;        // non-finite guard tripped; parameters restored
  // Measured on the first minibatch of the first epoch, before any parameter
  // change: both are exactly zero by construction.
  double first_minibatch_max_ratio_dev = 0.0;  // max |ratio - 1|
  double first_minibatch_kl = 0.0;
  std::vector<double> epoch_kl;          // KL after each completed epoch
  std::vector<double> epoch_value_loss;  // value loss after each completed epoch
};

// Runs epochs_per_update epochs of minibatch Adam over the batch: ascent on
// the clipped surrogate for [policy params; log_var], descent on the value
// loss. Old log-probabilities are evaluated under the entry parameters through
// the same gathered minibatch forwards used on the first epoch, so the first
// minibatch sees ratios exactly 1. Early-stops when the per-epoch KL exceeds
// 4 * kl_target. On any non-finite parameter/loss, restores the snapshot and
// both Adam states and reports aborted. adam_policy must be sized
// param_count(policy) + 6 (log_var tail); adam_value param_count(value).
UpdateDiagnostics update(const Batch& batch, PolicySnapshot& snap, AdamState& adam_policy,
                         AdamState& adam_value, const PpoHyperparams& hyper, Rng& rng);

// KL-targeted schedule: observed > 2*target -> lr_policy /= 1.5 and
// epsilon = max(eps/1.2, 0.05); observed < target/2 -> lr_policy *= 1.5 and
// epsilon = min(eps*1.2, 0.4); otherwise unchanged.
PpoHyperparams adapt_kl(double observed_kl, PpoHyperparams hyper);

// The 2^7 = 128 test-range corner initial states: every min/max combination of
// (r_x, v_x, v_y, v_z, w_x, w_y, w_z), all other state variables at the
// test-range centers. Bit j of the index selects max (1) or min (0) for the
// j-th variable in the order above.
std::vector<ChaserState> corner_cases(const ScenarioConfig& cfg);

// Deterministic rollouts from every corner case under the test time limit;
// returns the number of successful docks (0..128).
int corner_case_eval(const PolicySnapshot& snap, const RolloutContext& test_ctx);

}  // namespace dockrl
