#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "dockrl/lqr.hpp"
#include "dockrl/ppo.hpp"
#include "dockrl/reward.hpp"
#include "dockrl/scenario.hpp"

namespace dockrl {

// Execution parameters: where results go and how the run is driven. These do
// not change what is learned (except the seed), only how the run executes.
struct RunConfig {
  uint64_t master_seed = 1;
  int workers = 1;                      // rollout worker threads
  long episode_budget = 600000;         // stop after this many episodes
  int checkpoint_interval_updates = 10; // persist the latest state this often
  std::string lqr_gain_file;            // empty: tune the gain at startup
  std::string run_dir = "runs/default"; // logs, checkpoints, manifest

  // Throws ConfigError on violated invariants.
  void validate() const;
};

// Whole-project configuration tree. The reward goal attitude (q_des, w_des)
// is never configured directly: it is derived from
// scenario.docking.euler_goal_deg (zero goal rates) so the docking check and
// the attitude-error reward always agree on a single source of truth.
struct ProjectConfig {
  ScenarioConfig scenario;
  RewardWeights reward;
  LqrTuning lqr;
  PpoHyperparams ppo;
  RunConfig run;

  // Throws ConfigError (or std::invalid_argument from section validators).
  void validate() const;
};

// Defaults with the derived fields resolved.
ProjectConfig default_config();

// Re-derives reward.q_des / reward.w_des from the scenario goal attitude.
// Called automatically by default_config, load_config and apply_override.
void finalize_derived(ProjectConfig& cfg);

// Applies a (possibly partial) JSON tree over cfg. Unknown keys anywhere in
// the tree raise ConfigError naming the full dotted path; so do type or
// arity mismatches. prefix seeds the reported path (normally "").
void apply_config_json(ProjectConfig& cfg, const nlohmann::json& j,
                       const std::string& prefix = "");

// Reads a JSON config file, applies it over the defaults, derives the goal
// attitude and validates. ConfigError on I/O, parse, or content problems.
ProjectConfig load_config(const std::filesystem::path& path);

// Applies one "section.key=value" override (the CLI --set flag). The value is
// parsed as JSON; if that fails it is taken as a bare string. Does not
// validate: callers validate once after the last override.
void apply_override(ProjectConfig& cfg, const std::string& assignment);

// Full canonical dump (every key explicit, keys sorted by construction).
nlohmann::json config_to_json(const ProjectConfig& cfg);

// Writes config_to_json with stable formatting.
void save_config(const ProjectConfig& cfg, const std::filesystem::path& path);

// FNV-1a 64-bit hash over the canonical dump of everything that affects what
// is learned: scenario, reward, lqr, ppo, and the master seed. Execution
// details (workers, budget, directories) are excluded so a run can be resumed
// with more budget or different parallelism without a compatibility refusal.
uint64_t config_hash(const ProjectConfig& cfg);
std::string config_hash_hex(uint64_t hash);  // fixed-width 16-digit lowercase hex
std::string config_hash_hex(const ProjectConfig& cfg);

}  // namespace dockrl
