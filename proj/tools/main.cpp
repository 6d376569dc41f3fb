// dockrl command-line entry point.
//
// Subcommands: train, evaluate, rollout, lqr-design. Exit codes: 0 success,
// 1 usage error, 2 configuration error, 3 numerical failure. Every command
// writes a manifest (config snapshot, seed, build identifier) next to its
// outputs so any artifact can be reproduced from the manifest alone.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dockrl/checkpoint.hpp"
#include "dockrl/config.hpp"
#include "dockrl/errors.hpp"
#include "dockrl/eval.hpp"
#include "dockrl/lqr.hpp"
#include "dockrl/trainer.hpp"

namespace fs = std::filesystem;
using namespace dockrl;

namespace {

// --config accepts a path, or a bare name resolved against $DOCKRL_CONFIG_DIR
// (tried verbatim, then with .json appended). Paths that resolve nowhere are
// passed through so the loader reports the original name.
fs::path resolve_config_path(const std::string& arg) {
  const fs::path given(arg);
  if (fs::exists(given)) return given;
  if (arg.find('/') == std::string::npos) {
    if (const char* dir = std::getenv("DOCKRL_CONFIG_DIR")) {
      const fs::path base(dir);
      if (fs::exists(base / arg)) return base / arg;
      if (fs::exists(base / (arg + ".json"))) return base / (arg + ".json");
    }
  }
  return given;
}

ProjectConfig make_config(const std::string& config_arg,
                          const std::vector<std::string>& sets) {
  ProjectConfig cfg =
      config_arg.empty() ? default_config() : load_config(resolve_config_path(config_arg));
  for (const std::string& s : sets) apply_override(cfg, s);
  return cfg;  // commands validate after applying their own flag overrides
}

void write_cli_manifest(const fs::path& path, const char* command,
                        const ProjectConfig& cfg, const nlohmann::json& extra) {
  nlohmann::json j;
  j["command"] = command;
  j["build"] = kBuildId;
  j["config"] = config_to_json(cfg);
  j["config_hash"] = config_hash_hex(cfg);
  for (const auto& [k, v] : extra.items()) j[k] = v;
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
}

// A checkpoint is only meaningful under the config that produced it.
TrainingCheckpoint load_matching_checkpoint(const fs::path& path,
                                            const ProjectConfig& cfg) {
  TrainingCheckpoint ck = load_checkpoint(path);
  const uint64_t want = config_hash(cfg);
  if (ck.config_hash != want)
    throw ConfigError("checkpoint " + path.string() + " carries config hash " +
                      config_hash_hex(ck.config_hash) +
                      " but the current config hashes to " + config_hash_hex(want) +
                      "; refusing to mix configs");
  return ck;
}

void ensure_parent_dir(const fs::path& p) {
  if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
}

fs::path sibling_manifest(const fs::path& p) {
  return p.parent_path() / (p.stem().string() + ".manifest.json");
}

std::string success_text(const MonteCarloReport& rep) {
  if (rep.trials == 0) return "no-data";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", double(rep.docked) / double(rep.trials));
  return buf;
}

int cmd_train(ProjectConfig cfg, bool resume) {
  const TrainResult res = train(cfg, resume);
  std::cout << "train: ran " << res.updates_run << " updates / " << res.episodes_run
            << " episodes (totals: update " << res.final_state.update_index
            << ", episodes " << res.final_state.episode_count << ") in "
            << cfg.run.run_dir << '\n';
  return 0;
}

int cmd_evaluate(const ProjectConfig& cfg, const fs::path& checkpoint,
                 const fs::path& out_dir, int trials, uint64_t seed, int workers,
                 int export_n) {
  const TrainingCheckpoint ck = load_matching_checkpoint(checkpoint, cfg);
  const RolloutContext ctx =
      RolloutContext::make(cfg.scenario, cfg.reward, ck.lqr, /*training=*/false);
  const MonteCarloReport rep = monte_carlo(ck.snapshot, ctx, trials, seed, workers);

  fs::create_directories(out_dir);
  const fs::path report_path = out_dir / "monte_carlo_report.csv";
  save_report(rep, report_path);
  write_cli_manifest(out_dir / "evaluation_manifest.json", "evaluate", cfg,
                     {{"master_seed", seed},
                      {"trials", trials},
                      {"checkpoint", checkpoint.string()},
                      {"checkpoint_update_index", ck.update_index}});

  const int n_export = std::min(export_n, trials);
  for (int i = 0; i < n_export; ++i) {
    const EpisodeRecord ep = evaluation_episode(ck.snapshot, ctx, seed, uint64_t(i));
    char name[48];
    std::snprintf(name, sizeof name, "trajectory_%03d.csv", i);
    export_trajectory(ep, ctx, out_dir / name);
  }

  std::cout << "evaluate: " << rep.trials << " trials, " << rep.docked << " docked, "
            << rep.collided << " collided (success " << success_text(rep) << ") -> "
            << report_path.string() << '\n';
  return 0;
}

int cmd_rollout(const ProjectConfig& cfg, const fs::path& checkpoint, uint64_t seed,
                int trial, const fs::path& out) {
  if (trial < 0) throw ConfigError("--trial must be >= 0");
  const TrainingCheckpoint ck = load_matching_checkpoint(checkpoint, cfg);
  const RolloutContext ctx =
      RolloutContext::make(cfg.scenario, cfg.reward, ck.lqr, /*training=*/false);
  const EpisodeRecord ep = evaluation_episode(ck.snapshot, ctx, seed, uint64_t(trial));
  ensure_parent_dir(out);
  export_trajectory(ep, ctx, out);
  write_cli_manifest(sibling_manifest(out), "rollout", cfg,
                     {{"master_seed", seed},
                      {"trial", trial},
                      {"checkpoint", checkpoint.string()}});
  std::cout << "rollout: " << ep.steps() << " steps, docked=" << (ep.docked ? 1 : 0)
            << " collided=" << (ep.collided ? 1 : 0) << " score=" << ep.score() << " -> "
            << out.string() << '\n';
  return 0;
}

int cmd_lqr_design(const ProjectConfig& cfg, const fs::path& out,
                   fs::path reference_out) {
  const TuneResult tuned = tune_gain(cfg.scenario, cfg.lqr);
  ensure_parent_dir(out);
  save_lqr_design(tuned.design, &tuned, out);

  if (reference_out.empty()) reference_out = out.parent_path() / "lqr_reference.csv";
  ensure_parent_dir(reference_out);
  ReferenceTrajectory traj =
      simulate_reference(tuned.design, cfg.scenario.ic_test.r_center_m,
                         cfg.scenario.ic_test.v_center_ms, cfg.scenario.dt_s,
                         cfg.lqr.t_max_s);
  if (!traj.arrived)
    throw NumericalError("tuned reference failed to arrive within " +
                         std::to_string(cfg.lqr.t_max_s) + " s");
  // The closed loop aims past the port to keep the approach speed positive;
  // the exported trajectory is the approach segment, cut at arrival.
  const size_t arrival_idx = size_t(traj.arrival_s / cfg.scenario.dt_s + 0.5);
  traj.samples.resize(std::min(traj.samples.size(), arrival_idx + 1));
  write_reference_csv(traj, reference_out);
  write_cli_manifest(sibling_manifest(out), "lqr-design", cfg,
                     {{"master_seed", cfg.run.master_seed},
                      {"alpha", tuned.alpha},
                      {"arrival_s", tuned.arrival_s}});

  std::cout << "lqr-design: alpha " << tuned.alpha << ", nominal arrival "
            << tuned.arrival_s << " s after " << tuned.evaluations
            << " probes -> " << out.string() << " (reference "
            << reference_out.string() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"6-DOF spacecraft docking: LQR-shaped PPO training and evaluation"};
  app.set_version_flag("--version", kBuildId);
  app.require_subcommand(1);

  struct CommonArgs {
    std::string config;
    std::vector<std::string> sets;
  };
  auto add_common = [](CLI::App* sub, CommonArgs& a) {
    sub->add_option("--config", a.config,
                    "Config file (path, or bare name under $DOCKRL_CONFIG_DIR)");
    sub->add_option("--set", a.sets,
                    "Override one config key, e.g. --set ppo.kl_target=0.002")
        ->take_all();
  };

  CommonArgs train_args;
  std::string run_dir;
  bool resume = false;
  uint64_t train_seed = 0;
  int train_workers = 0;
  CLI::App* train_cmd = app.add_subcommand("train", "Run the learning loop");
  add_common(train_cmd, train_args);
  train_cmd->add_option("--run-dir", run_dir, "Directory for logs and checkpoints");
  train_cmd->add_flag("--resume", resume, "Continue from the latest checkpoint");
  auto* train_seed_opt =
      train_cmd->add_option("--seed", train_seed, "Master seed (overrides config)");
  auto* train_workers_opt =
      train_cmd->add_option("--workers", train_workers, "Rollout worker threads");

  CommonArgs eval_args;
  std::string eval_checkpoint, eval_out = "eval";
  int trials = 1000, export_n = 0, eval_workers = 0;
  uint64_t eval_seed = 0;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "Monte Carlo evaluation of a checkpoint");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint to evaluate")
      ->required();
  eval_cmd->add_option("--trials", trials, "Monte Carlo trial count")
      ->check(CLI::NonNegativeNumber);
  auto* eval_seed_opt = eval_cmd->add_option(
      "--seed", eval_seed, "Evaluation master seed (default: config master seed)");
  eval_cmd->add_option("--out", eval_out, "Output directory for report and CSVs");
  eval_cmd->add_option("--export-trajectories", export_n,
                       "Write per-trial CSVs for the first N trials")
      ->check(CLI::NonNegativeNumber);
  auto* eval_workers_opt =
      eval_cmd->add_option("--workers", eval_workers, "Evaluation worker threads");

  CommonArgs roll_args;
  std::string roll_checkpoint, roll_out = "episode.csv";
  int trial = 0;
  uint64_t roll_seed = 0;
  CLI::App* roll_cmd =
      app.add_subcommand("rollout", "Export one deterministic evaluation episode");
  add_common(roll_cmd, roll_args);
  roll_cmd->add_option("--checkpoint", roll_checkpoint, "Checkpoint to roll out")
      ->required();
  auto* roll_seed_opt = roll_cmd->add_option(
      "--seed", roll_seed, "Evaluation master seed (default: config master seed)");
  roll_cmd->add_option("--trial", trial, "Trial index within the seed's stream");
  roll_cmd->add_option("--out", roll_out, "Output CSV path");

  CommonArgs lqr_args;
  std::string lqr_out = "lqr_gain.json", lqr_reference;
  CLI::App* lqr_cmd =
      app.add_subcommand("lqr-design", "Tune the reference gain and export it");
  add_common(lqr_cmd, lqr_args);
  lqr_cmd->add_option("--out", lqr_out, "Gain file path");
  lqr_cmd->add_option("--reference", lqr_reference,
                      "Reference trajectory CSV (default: lqr_reference.csv beside the gain)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) {
      ProjectConfig cfg = make_config(train_args.config, train_args.sets);
      if (!run_dir.empty()) cfg.run.run_dir = run_dir;
      if (train_seed_opt->count()) cfg.run.master_seed = train_seed;
      if (train_workers_opt->count()) cfg.run.workers = train_workers;
      cfg.validate();
      return cmd_train(cfg, resume);
    }
    if (*eval_cmd) {
      ProjectConfig cfg = make_config(eval_args.config, eval_args.sets);
      cfg.validate();
      const uint64_t seed = eval_seed_opt->count() ? eval_seed : cfg.run.master_seed;
      const int workers = eval_workers_opt->count() ? eval_workers : cfg.run.workers;
      if (workers < 1) throw ConfigError("--workers must be >= 1");
      return cmd_evaluate(cfg, eval_checkpoint, eval_out, trials, seed, workers,
                          export_n);
    }
    if (*roll_cmd) {
      ProjectConfig cfg = make_config(roll_args.config, roll_args.sets);
      cfg.validate();
      const uint64_t seed = roll_seed_opt->count() ? roll_seed : cfg.run.master_seed;
      return cmd_rollout(cfg, roll_checkpoint, seed, trial, roll_out);
    }
    if (*lqr_cmd) {
      ProjectConfig cfg = make_config(lqr_args.config, lqr_args.sets);
      cfg.validate();
      return cmd_lqr_design(cfg, lqr_out, lqr_reference);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
