#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "dockrl/config.hpp"
#include "dockrl/ppo.hpp"

namespace dockrl {

// Published full-scale comparison values shown in every Monte Carlo report:
// 1000/1000 successful trials with a 116.44 s mean trajectory.
inline constexpr double kReferenceSuccessFraction = 1.0;
inline constexpr double kReferenceMeanLengthS = 116.44;

// Final-state and expenditure statistics of one test rollout. Cross-track and
// rate errors are absolute values; the closing speed keeps its sign.
struct TrajectoryStats {
  double length_s = 0.0;
  double pos_err_y_m = 0.0;   // |port position error|, cross-track
  double pos_err_z_m = 0.0;
  double vel_err_y_ms = 0.0;  // |port velocity error|, cross-track
  double vel_err_z_ms = 0.0;
  double final_vx_ms = 0.0;   // port closing speed at the final state
  double att_err_deg = 0.0;   // axis-angle from the goal attitude
  double rate_err_x_degs = 0.0;  // |body rate - goal rate| per axis
  double rate_err_y_degs = 0.0;
  double rate_err_z_degs = 0.0;
  double thrust_n = 0.0;   // L1 per-axis time integral of force commands
  double torque_nm = 0.0;  // same for torque commands
  bool docked = false;
  bool collided = false;
};

// The numeric fields above, in report order, for aggregation and export.
struct StatField {
  const char* name;
  double TrajectoryStats::*member;
};
const std::vector<StatField>& stat_fields();

// L1-per-axis time integrals (thrust N, torque N*m) of the physical commands
// the raw recorded actions map to under the scenario limits.
std::pair<double, double> expenditure(const EpisodeRecord& ep, const ScenarioConfig& cfg);

// Statistics of one episode under the context it was rolled out in.
TrajectoryStats trajectory_stats(const EpisodeRecord& ep, const RolloutContext& ctx);

// Aggregate over trials in order. Mean and max are computed per field, both
// over the successful (docked) subset and over all trials; with no trials (or
// no successes) the corresponding aggregates stay zero and the report labels
// them as no-data.
struct MonteCarloReport {
  int trials = 0;
  int docked = 0;
  int collided = 0;
  std::vector<TrajectoryStats> per_trial;  // trial order
  TrajectoryStats mean_success, max_success;
  TrajectoryStats mean_all, max_all;
};
MonteCarloReport aggregate_report(std::vector<TrajectoryStats> per_trial);

// The exact deterministic episode trial `index` plays: the initial condition
// is drawn from the testing range with the trial's derived seed, the rollout
// uses the mean action. ctx must be a testing context.
EpisodeRecord evaluation_episode(const PolicySnapshot& snap, const RolloutContext& ctx,
                                 uint64_t master_seed, uint64_t trial_index);

// n independent deterministic trials, parallel across workers, aggregated in
// trial order (bit-identical for a fixed seed regardless of worker count).
// Throws std::invalid_argument when ctx is a training context.
MonteCarloReport monte_carlo(const PolicySnapshot& snap, const RolloutContext& ctx, int n,
                             uint64_t master_seed, int workers = 1);

// Deterministic structured-text report (full-precision numbers), including
// the full-scale reference values for comparison.
void write_report(const MonteCarloReport& rep, std::ostream& os);
void save_report(const MonteCarloReport& rep, const std::filesystem::path& path);

// Per-step CSV of one episode: state, derived Euler angles, physical
// commands, port relative state, shaping reward, and the reward accumulated
// on arrival at each row's state. steps()+1 rows; the final row carries zero
// commands. Verifies a record marked docked against the docking check
// (NumericalError on disagreement); throws ConfigError on I/O failure.
void export_trajectory(const EpisodeRecord& ep, const RolloutContext& ctx,
                       const std::filesystem::path& path);

}  // namespace dockrl
