#include "dockrl/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dockrl/errors.hpp"
#include "dockrl/ioutil.hpp"
#include "dockrl/lqr.hpp"
#include "dockrl/scenario.hpp"

namespace dockrl {
namespace {

namespace fs = std::filesystem;

// Fills eps[i] from the episode with global index base_episode + i. Every
// episode owns an RNG stream derived from its global index, so the result is
// a pure function of (config, snapshot, episode index) no matter how many
// workers share the batch.
void run_rollouts(std::vector<EpisodeRecord>& eps, const PolicySnapshot& snap,
                  const RolloutContext& ctx, const ProjectConfig& cfg, long base_episode) {
  const int n = int(eps.size());
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      Rng rng(derive_seed(cfg.run.master_seed, uint64_t(base_episode + i)));
      const ChaserState x0 = sample_initial_condition(cfg.scenario.ic_train, rng);
      eps[i] = rollout(snap, ctx, x0, rng, /*stochastic=*/true);
    }
  };
  const int workers = std::max(1, std::min(cfg.run.workers, n));
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
}

void write_manifest(const ProjectConfig& cfg, const fs::path& path) {
  nlohmann::json m;
  m["config"] = config_to_json(cfg);
  m["config_hash"] = config_hash_hex(cfg);
  m["master_seed"] = cfg.run.master_seed;
  m["build"] = kBuildId;
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path.string() + " for writing");
  f << m.dump(2) << '\n';
}

struct BatchSummary {
  double mean_score = 0.0;
  double mean_lqr = 0.0;
  double mean_attitude = 0.0;
  double mean_control = 0.0;
  double mean_collision = 0.0;
  double dock_rate = 0.0;
  double mean_length_s = 0.0;
};

BatchSummary summarize(const std::vector<EpisodeRecord>& eps, double dt) {
  BatchSummary s;
  for (const auto& ep : eps) {
    s.mean_score += ep.score();
    s.mean_lqr += ep.sum_lqr;
    s.mean_attitude += ep.sum_attitude;
    s.mean_control += ep.sum_control;
    s.mean_collision += ep.sum_collision;
    s.dock_rate += ep.docked ? 1.0 : 0.0;
    s.mean_length_s += ep.steps() * dt;
  }
  const double n = double(eps.size());
  s.mean_score /= n;
  s.mean_lqr /= n;
  s.mean_attitude /= n;
  s.mean_control /= n;
  s.mean_collision /= n;
  s.dock_rate /= n;
  s.mean_length_s /= n;
  return s;
}

}  // namespace

TrainResult train(const ProjectConfig& cfg, bool resume) {
  cfg.validate();
  const fs::path run_dir = cfg.run.run_dir;
  fs::create_directories(run_dir);
  const uint64_t hash = config_hash(cfg);
  const fs::path latest_path = run_dir / kLatestCheckpointFile;

  PpoHyperparams hyper = cfg.ppo;
  TrainingCheckpoint ck;
  if (resume) {
    ck = load_checkpoint(latest_path);
    if (ck.config_hash != hash)
      throw ConfigError("refusing to resume: checkpoint " + latest_path.string() +
                        " was trained with config hash " + config_hash_hex(ck.config_hash) +
                        ", current config hashes to " + config_hash_hex(hash));
    hyper.epsilon = ck.epsilon;
    hyper.lr_policy = ck.lr_policy;
    hyper.lr_value = ck.lr_value;
  } else {
    ck.config_hash = hash;
    if (!cfg.run.lqr_gain_file.empty()) {
      ck.lqr = load_lqr_design(cfg.run.lqr_gain_file);
    } else {
      const TuneResult tuned = tune_gain(cfg.scenario, cfg.lqr);
      ck.lqr = tuned.design;
      save_lqr_design(tuned.design, &tuned, run_dir / kTunedGainFile);
    }
    Rng init_rng(derive_seed(cfg.run.master_seed, kPolicyInitStream));
    ck.snapshot = PolicySnapshot::make(init_rng);
    ck.snapshot.normalize_quat = cfg.ppo.normalize_quat_inputs;
    ck.snapshot.log_var.setConstant(cfg.ppo.init_log_var);
    ck.adam_policy = AdamState(param_count(ck.snapshot.policy) + kActionDim);
    ck.adam_value = AdamState(param_count(ck.snapshot.value));
    ck.lr_policy = hyper.lr_policy;
    ck.lr_value = hyper.lr_value;
    ck.epsilon = hyper.epsilon;
  }
  write_manifest(cfg, run_dir / kManifestFile);

  const RolloutContext train_ctx =
      RolloutContext::make(cfg.scenario, cfg.reward, ck.lqr, /*training=*/true);
  const RolloutContext test_ctx =
      RolloutContext::make(cfg.scenario, cfg.reward, ck.lqr, /*training=*/false);

  std::ofstream log(run_dir / kTrainingLogFile,
                    resume ? (std::ios::out | std::ios::app) : std::ios::trunc);
  if (!log)
    throw ConfigError("cannot open " + (run_dir / kTrainingLogFile).string() +
                      " for writing");
  if (!resume) {
    log << kTrainingLogHeader << '\n';
    log.flush();
    save_checkpoint(ck, latest_path);  // update-0 state, evaluable immediately
  }

  TrainResult result;
  const int batch_episodes = hyper.batch_episodes;
  std::vector<EpisodeRecord> episodes(batch_episodes);
  while (ck.episode_count + batch_episodes <= cfg.run.episode_budget) {
    run_rollouts(episodes, ck.snapshot, train_ctx, cfg, ck.episode_count);

    // Normalizer shards merge at the rollout/update barrier, in episode order
    // so the result is independent of the worker partitioning.
    for (const auto& ep : episodes) ck.snapshot.norm.update_batch(ep.obs);

    const Batch batch = assemble_batch(episodes, cfg.reward.gamma1, cfg.reward.gamma2,
                                       hyper.normalize_advantages);
    Rng update_rng(
        derive_seed(cfg.run.master_seed, kUpdateStreamBase + uint64_t(ck.update_index)));
    const double epsilon_used = hyper.epsilon;
    const double lr_policy_used = hyper.lr_policy;
    const UpdateDiagnostics diag =
        update(batch, ck.snapshot, ck.adam_policy, ck.adam_value, hyper, update_rng);
    if (!diag.aborted) hyper = adapt_kl(diag.kl, hyper);
    ck.lr_policy = hyper.lr_policy;
    ck.lr_value = hyper.lr_value;
    ck.epsilon = hyper.epsilon;

    const int corner_docks = corner_case_eval(ck.snapshot, test_ctx);
    const bool retained = corner_docks >= ck.best_corner_docks;
    if (retained) ck.best_corner_docks = corner_docks;

    ck.update_index += 1;
    ck.episode_count += batch_episodes;
    result.updates_run += 1;
    result.episodes_run += batch_episodes;

    if (retained) save_checkpoint(ck, run_dir / kBestCheckpointFile);

    const BatchSummary s = summarize(episodes, cfg.scenario.dt_s);
    log << ck.update_index << ',' << ck.episode_count << ',' << g17(s.mean_score) << ','
        << g17(s.mean_lqr) << ',' << g17(s.mean_attitude) << ',' << g17(s.mean_control)
        << ',' << g17(s.mean_collision) << ',' << g17(s.dock_rate) << ','
        << g17(s.mean_length_s) << ',' << g17(diag.kl) << ',' << g17(diag.value_loss)
        << ',' << g17(epsilon_used) << ',' << g17(lr_policy_used) << ','
        << g17(std::exp(ck.snapshot.log_var.maxCoeff())) << ',' << corner_docks << ','
        << ck.best_corner_docks << '\n';
    log.flush();
    if (!log)
      throw ConfigError("failed writing " + (run_dir / kTrainingLogFile).string());

    if (ck.update_index % cfg.run.checkpoint_interval_updates == 0)
      save_checkpoint(ck, latest_path);
  }
  save_checkpoint(ck, latest_path);
  result.final_state = ck;
  return result;
}

}  // namespace dockrl
