#pragma once

#include <cstdint>
#include <filesystem>

#include "dockrl/checkpoint.hpp"
#include "dockrl/config.hpp"
#include "dockrl/ppo.hpp"

namespace dockrl {

// Build identifier stamped into run manifests (no timestamps: runs with the
// same config and seed produce byte-identical artifacts).
inline constexpr const char* kBuildId = "dockrl 1.0.0";

// Files a training run maintains inside its run directory.
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kTrainingLogFile = "training_log.csv";
inline constexpr const char* kLatestCheckpointFile = "checkpoint_latest.json";
inline constexpr const char* kBestCheckpointFile = "checkpoint_best.json";
inline constexpr const char* kTunedGainFile = "lqr_gain.json";

// All randomness flows from run.master_seed through derive_seed(master,
// stream). Episode streams are the global episode index, counted from the
// start of the run, so results do not depend on the worker count. Auxiliary
// streams live in the upper half of the tag space where episode indices
// cannot reach.
inline constexpr uint64_t kPolicyInitStream = 0x8000000000000000ull;
inline constexpr uint64_t kUpdateStreamBase = 0xC000000000000000ull;  // + update index

// Column header of training_log.csv. One row is appended and flushed per
// update; epsilon/lr_policy are the values used for that update (the adapted
// values appear on the next row).
inline constexpr const char* kTrainingLogHeader =
    "update,episodes,mean_score,mean_lqr,mean_attitude,mean_control,mean_collision,"
    "dock_rate,mean_length_s,kl,value_loss,epsilon,lr_policy,max_action_var,"
    "corner_docks,best_corner_docks";

struct TrainResult {
  TrainingCheckpoint final_state;
  int updates_run = 0;     // updates executed by this invocation
  long episodes_run = 0;   // episodes consumed by this invocation
};

// Runs the learning loop inside cfg.run.run_dir until the next full batch of
// ppo.batch_episodes would exceed run.episode_budget (the budget is a cap;
// only whole batches run). A fresh start tunes or loads the reference gain,
// initializes the policy from the master seed, and writes the manifest, log
// header, and an update-0 checkpoint. With resume, training state is restored
// from checkpoint_latest.json and the log is appended; a resumed run is
// bit-identical to one that was never interrupted. Throws ConfigError when
// resuming against a different config (hash mismatch) or on I/O failure.
TrainResult train(const ProjectConfig& cfg, bool resume);

}  // namespace dockrl
