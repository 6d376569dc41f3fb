#pragma once

#include <cstdint>
#include <filesystem>

#include "dockrl/lqr.hpp"
#include "dockrl/nn.hpp"
#include "dockrl/policy.hpp"

namespace dockrl {

// Complete training state: everything needed to continue a run bit-exactly
// (besides the config, which is guarded by its hash) or to evaluate the
// stored policy. The reference gain rides along so a resumed run keeps
// shaping rewards with the exact gain it trained with.
struct TrainingCheckpoint {
  uint64_t config_hash = 0;
  long update_index = 0;      // completed updates
  long episode_count = 0;     // episodes consumed so far
  int best_corner_docks = -1; // -1 until the first corner evaluation
  PolicySnapshot snapshot;
  LqrDesign lqr;
  AdamState adam_policy{0};   // sized param_count(policy) + action dim
  AdamState adam_value{0};    // sized param_count(value)
  // Online-adapted optimizer settings (the rest of the hyperparameters are
  // config-derived and hash-guarded).
  double lr_policy = 3e-4;
  double lr_value = 1e-3;
  double epsilon = 0.2;
};

// Writes JSON with shortest-round-trip doubles (bit-exact reload), via a
// temporary file renamed into place so an interrupted save never corrupts an
// existing checkpoint. Throws ConfigError on I/O failure.
void save_checkpoint(const TrainingCheckpoint& ck, const std::filesystem::path& path);

// Loads and fully validates a checkpoint: structural consistency of the
// networks, matching optimizer-state sizes, finite values everywhere, and a
// fresh Riccati-residual check on the embedded gain. Throws ConfigError on
// malformed content, NumericalError when numeric self-checks fail.
TrainingCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dockrl
