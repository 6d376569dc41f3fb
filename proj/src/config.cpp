#include "dockrl/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dockrl/errors.hpp"
#include "dockrl/ioutil.hpp"

namespace dockrl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + (path.empty() ? std::string("<root>") : path) + ": " + what);
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

long as_long(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<long>();
}

uint64_t as_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_number_integer() && v.get<int64_t>() >= 0)
    return static_cast<uint64_t>(v.get<int64_t>());
  fail(path, "expected a non-negative integer");
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

Eigen::Vector3d as_vec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) out[i] = as_number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

Vector6d as_vec6(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 6) fail(path, "expected an array of 6 numbers");
  Vector6d out;
  for (int i = 0; i < 6; ++i) out[i] = as_number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void apply_docking(DockingConditions& d, const json& j, const std::string& p) {
  require_object(j, p);
  for (const auto& [key, val] : j.items()) {
    const std::string kp = p + "." + key;
    if (key == "r_p_tol_m") d.r_p_tol_m = as_number(val, kp);
    else if (key == "v_px_goal_ms") d.v_px_goal_ms = as_number(val, kp);
    else if (key == "v_px_lo_ms") d.v_px_lo_ms = as_number(val, kp);
    else if (key == "v_px_hi_ms") d.v_px_hi_ms = as_number(val, kp);
    else if (key == "v_yz_tol_ms") d.v_yz_tol_ms = as_number(val, kp);
    else if (key == "euler_goal_deg") d.euler_goal_deg = as_vec3(val, kp);
    else if (key == "euler_tol_deg") d.euler_tol_deg = as_number(val, kp);
    else if (key == "w_tol_degs") d.w_tol_degs = as_number(val, kp);
    else fail(kp, "unknown key");
  }
}

void apply_ic_range(InitialConditionRange& r, const json& j, const std::string& p) {
  require_object(j, p);
  for (const auto& [key, val] : j.items()) {
    const std::string kp = p + "." + key;
    if (key == "r_center_m") r.r_center_m = as_vec3(val, kp);
    else if (key == "r_halfwidth_m") r.r_halfwidth_m = as_vec3(val, kp);
    else if (key == "v_center_ms") r.v_center_ms = as_vec3(val, kp);
    else if (key == "v_halfwidth_ms") r.v_halfwidth_ms = as_vec3(val, kp);
    else if (key == "euler_center_deg") r.euler_center_deg = as_vec3(val, kp);
    else if (key == "euler_halfwidth_deg") r.euler_halfwidth_deg = as_vec3(val, kp);
    else if (key == "w_center_degs") r.w_center_degs = as_vec3(val, kp);
    else if (key == "w_halfwidth_degs") r.w_halfwidth_degs = as_vec3(val, kp);
    else fail(kp, "unknown key");
  }
}

void apply_scenario(ScenarioConfig& s, const json& j, const std::string& p) {
  require_object(j, p);
  for (const auto& [key, val] : j.items()) {
    const std::string kp = p + "." + key;
    if (key == "dt_s") s.dt_s = as_number(val, kp);
    else if (key == "t_limit_train_s") s.t_limit_train_s = as_number(val, kp);
    else if (key == "t_limit_test_s") s.t_limit_test_s = as_number(val, kp);
    else if (key == "f_max_n") s.f_max_n = as_vec3(val, kp);
    else if (key == "l_max_nm") s.l_max_nm = as_vec3(val, kp);
    else if (key == "r_port_body_m") s.r_port_body_m = as_vec3(val, kp);
    else if (key == "r_target_port_m") s.r_target_port_m = as_vec3(val, kp);
    else if (key == "box_y_m") s.box_y_m = as_number(val, kp);
    else if (key == "box_z_m") s.box_z_m = as_number(val, kp);
    else if (key == "box_depth_x_m") s.box_depth_x_m = as_number(val, kp);
    else if (key == "mass_kg") {
      const double mass = as_number(val, kp);
      try {
        s.mass_props = MassProperties(mass, s.mass_props.inertia);
      } catch (const std::invalid_argument& e) {
        fail(kp, e.what());
      }
    } else if (key == "inertia_diag_kgm2") {
      const Eigen::Vector3d diag = as_vec3(val, kp);
      try {
        s.mass_props = MassProperties(s.mass_props.mass_kg, diag.asDiagonal());
      } catch (const std::invalid_argument& e) {
        fail(kp, e.what());
      }
    } else if (key == "mass_props_placeholder") {
      s.mass_props_placeholder = as_bool(val, kp);
    } else if (key == "port_rate_in_inertial") {
      s.port_rate_in_inertial = as_bool(val, kp);
    } else if (key == "docking") {
      apply_docking(s.docking, val, kp);
    } else if (key == "ic_test") {
      apply_ic_range(s.ic_test, val, kp);
    } else if (key == "ic_train") {
      apply_ic_range(s.ic_train, val, kp);
    } else {
      fail(kp, "unknown key");
    }
  }
}

void apply_reward(RewardWeights& r, const json& j, const std::string& p) {
  require_object(j, p);
  for (const auto& [key, val] : j.items()) {
    const std::string kp = p + "." + key;
    if (key == "m_diag") r.M = as_vec3(val, kp).asDiagonal();
    else if (key == "q_diag") r.Q = as_vec6(val, kp).asDiagonal();
    else if (key == "p_diag") r.P = as_vec6(val, kp).asDiagonal();
    else if (key == "c") r.c = as_number(val, kp);
    else if (key == "d") r.d = as_number(val, kp);
    else if (key == "gamma1") r.gamma1 = as_number(val, kp);
    else if (key == "gamma2") r.gamma2 = as_number(val, kp);
    else fail(kp, "unknown key");
  }
}

void apply_lqr(LqrTuning& t, const json& j, const std::string& p) {
  require_object(j, p);
  for (const auto& [key, val] : j.items()) {
    const std::string kp = p + "." + key;
    if (key == "base_q_pos") t.base_q_pos = as_number(val, kp);
    else if (key == "base_q_vel") t.base_q_vel = as_number(val, kp);
    else if (key == "r_diag") t.r_diag = as_vec3(val, kp);
    else if (key == "origin_offset_m") t.origin_offset = as_vec3(val, kp);
    else if (key == "target_arrival_s") t.target_arrival_s = as_number(val, kp);
    else if (key == "arrival_tol_s") t.arrival_tol_s = as_number(val, kp);
    else if (key == "t_max_s") t.t_max_s = as_number(val, kp);
    else fail(kp, "unknown key");
  }
}

void apply_ppo(PpoHyperparams& h, const json& j, const std::string& p) {
  require_object(j, p);
  for (const auto& [key, val] : j.items()) {
    const std::string kp = p + "." + key;
    if (key == "epsilon") h.epsilon = as_number(val, kp);
    else if (key == "lr_policy") h.lr_policy = as_number(val, kp);
    else if (key == "lr_value") h.lr_value = as_number(val, kp);
    else if (key == "kl_target") h.kl_target = as_number(val, kp);
    else if (key == "batch_episodes") h.batch_episodes = as_int(val, kp);
    else if (key == "epochs_per_update") h.epochs_per_update = as_int(val, kp);
    else if (key == "minibatch_size") h.minibatch_size = as_int(val, kp);
    else if (key == "normalize_advantages") h.normalize_advantages = as_bool(val, kp);
    else if (key == "normalize_quat_inputs") h.normalize_quat_inputs = as_bool(val, kp);
    else if (key == "init_log_var") h.init_log_var = as_number(val, kp);
    else fail(kp, "unknown key");
  }
}

void apply_run(RunConfig& r, const json& j, const std::string& p) {
  require_object(j, p);
  for (const auto& [key, val] : j.items()) {
    const std::string kp = p + "." + key;
    if (key == "master_seed") r.master_seed = as_u64(val, kp);
    else if (key == "workers") r.workers = as_int(val, kp);
    else if (key == "episode_budget") r.episode_budget = as_long(val, kp);
    else if (key == "checkpoint_interval_updates")
      r.checkpoint_interval_updates = as_int(val, kp);
    else if (key == "lqr_gain_file") r.lqr_gain_file = as_string(val, kp);
    else if (key == "run_dir") r.run_dir = as_string(val, kp);
    else fail(kp, "unknown key");
  }
}

json docking_to_json(const DockingConditions& d) {
  json j;
  j["r_p_tol_m"] = d.r_p_tol_m;
  j["v_px_goal_ms"] = d.v_px_goal_ms;
  j["v_px_lo_ms"] = d.v_px_lo_ms;
  j["v_px_hi_ms"] = d.v_px_hi_ms;
  j["v_yz_tol_ms"] = d.v_yz_tol_ms;
  j["euler_goal_deg"] = to_json_vector(d.euler_goal_deg);
  j["euler_tol_deg"] = d.euler_tol_deg;
  j["w_tol_degs"] = d.w_tol_degs;
  return j;
}

json ic_range_to_json(const InitialConditionRange& r) {
  json j;
  j["r_center_m"] = to_json_vector(r.r_center_m);
  j["r_halfwidth_m"] = to_json_vector(r.r_halfwidth_m);
  j["v_center_ms"] = to_json_vector(r.v_center_ms);
  j["v_halfwidth_ms"] = to_json_vector(r.v_halfwidth_ms);
  j["euler_center_deg"] = to_json_vector(r.euler_center_deg);
  j["euler_halfwidth_deg"] = to_json_vector(r.euler_halfwidth_deg);
  j["w_center_degs"] = to_json_vector(r.w_center_degs);
  j["w_halfwidth_degs"] = to_json_vector(r.w_halfwidth_degs);
  return j;
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void RunConfig::validate() const {
  if (episode_budget <= 0) throw ConfigError("config: run.episode_budget must be positive");
  if (workers < 1) throw ConfigError("config: run.workers must be >= 1");
  if (checkpoint_interval_updates < 1)
    throw ConfigError("config: run.checkpoint_interval_updates must be >= 1");
}

void ProjectConfig::validate() const {
  try {
    scenario.validate();
    reward.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!(lqr.base_q_pos > 0.0) || !(lqr.base_q_vel > 0.0))
    throw ConfigError("config: lqr base weights must be positive");
  if (lqr.r_diag.minCoeff() <= 0.0)
    throw ConfigError("config: lqr.r_diag entries must be positive");
  if (!(lqr.target_arrival_s > 0.0) || !(lqr.arrival_tol_s >= 0.0))
    throw ConfigError("config: lqr arrival target/tolerance out of range");
  if (lqr.t_max_s < lqr.target_arrival_s)
    throw ConfigError("config: lqr.t_max_s must cover the arrival target");
  ppo.validate();
  run.validate();
}

ProjectConfig default_config() {
  ProjectConfig cfg;
  finalize_derived(cfg);
  return cfg;
}

void finalize_derived(ProjectConfig& cfg) {
  cfg.reward.q_des =
      Quat::from_euler_xyz(cfg.scenario.docking.euler_goal_deg * M_PI / 180.0).normalized();
  cfg.reward.w_des = Eigen::Vector3d::Zero();
}

void apply_config_json(ProjectConfig& cfg, const nlohmann::json& j, const std::string& prefix) {
  require_object(j, prefix);
  for (const auto& [key, val] : j.items()) {
    const std::string kp = prefix.empty() ? key : prefix + "." + key;
    if (key == "scenario") apply_scenario(cfg.scenario, val, kp);
    else if (key == "reward") apply_reward(cfg.reward, val, kp);
    else if (key == "lqr") apply_lqr(cfg.lqr, val, kp);
    else if (key == "ppo") apply_ppo(cfg.ppo, val, kp);
    else if (key == "run") apply_run(cfg.run, val, kp);
    else fail(kp, "unknown key");
  }
}

ProjectConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  ProjectConfig cfg = default_config();
  apply_config_json(cfg, j);
  finalize_derived(cfg);
  cfg.validate();
  return cfg;
}

void apply_override(ProjectConfig& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("config: override must look like section.key=value, got '" +
                      assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  nlohmann::json parsed = nlohmann::json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) parsed = value;  // bare strings need no quotes

  // Wrap the value in nested objects following the dotted path.
  std::vector<std::string> segments;
  size_t start = 0;
  while (true) {
    const size_t dot = key.find('.', start);
    const std::string seg =
        key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (seg.empty()) throw ConfigError("config: override has an empty path segment: " + key);
    segments.push_back(seg);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  nlohmann::json wrapped = parsed;
  for (auto it = segments.rbegin(); it != segments.rend(); ++it)
    wrapped = nlohmann::json{{*it, wrapped}};

  apply_config_json(cfg, wrapped);
  finalize_derived(cfg);
}

nlohmann::json config_to_json(const ProjectConfig& cfg) {
  json j;

  json& s = j["scenario"];
  s["dt_s"] = cfg.scenario.dt_s;
  s["t_limit_train_s"] = cfg.scenario.t_limit_train_s;
  s["t_limit_test_s"] = cfg.scenario.t_limit_test_s;
  s["f_max_n"] = to_json_vector(cfg.scenario.f_max_n);
  s["l_max_nm"] = to_json_vector(cfg.scenario.l_max_nm);
  s["r_port_body_m"] = to_json_vector(cfg.scenario.r_port_body_m);
  s["r_target_port_m"] = to_json_vector(cfg.scenario.r_target_port_m);
  s["box_y_m"] = cfg.scenario.box_y_m;
  s["box_z_m"] = cfg.scenario.box_z_m;
  s["box_depth_x_m"] = cfg.scenario.box_depth_x_m;
  s["mass_kg"] = cfg.scenario.mass_props.mass_kg;
  s["inertia_diag_kgm2"] = to_json_vector(cfg.scenario.mass_props.inertia.diagonal());
  s["mass_props_placeholder"] = cfg.scenario.mass_props_placeholder;
  s["port_rate_in_inertial"] = cfg.scenario.port_rate_in_inertial;
  s["docking"] = docking_to_json(cfg.scenario.docking);
  s["ic_test"] = ic_range_to_json(cfg.scenario.ic_test);
  s["ic_train"] = ic_range_to_json(cfg.scenario.ic_train);

  json& r = j["reward"];
  r["m_diag"] = to_json_vector(cfg.reward.M.diagonal());
  r["q_diag"] = to_json_vector(cfg.reward.Q.diagonal());
  r["p_diag"] = to_json_vector(cfg.reward.P.diagonal());
  r["c"] = cfg.reward.c;
  r["d"] = cfg.reward.d;
  r["gamma1"] = cfg.reward.gamma1;
  r["gamma2"] = cfg.reward.gamma2;

  json& l = j["lqr"];
  l["base_q_pos"] = cfg.lqr.base_q_pos;
  l["base_q_vel"] = cfg.lqr.base_q_vel;
  l["r_diag"] = to_json_vector(cfg.lqr.r_diag);
  l["origin_offset_m"] = to_json_vector(cfg.lqr.origin_offset);
  l["target_arrival_s"] = cfg.lqr.target_arrival_s;
  l["arrival_tol_s"] = cfg.lqr.arrival_tol_s;
  l["t_max_s"] = cfg.lqr.t_max_s;

  json& p = j["ppo"];
  p["epsilon"] = cfg.ppo.epsilon;
  p["lr_policy"] = cfg.ppo.lr_policy;
  p["lr_value"] = cfg.ppo.lr_value;
  p["kl_target"] = cfg.ppo.kl_target;
  p["batch_episodes"] = cfg.ppo.batch_episodes;
  p["epochs_per_update"] = cfg.ppo.epochs_per_update;
  p["minibatch_size"] = cfg.ppo.minibatch_size;
  p["normalize_advantages"] = cfg.ppo.normalize_advantages;
  p["normalize_quat_inputs"] = cfg.ppo.normalize_quat_inputs;
  p["init_log_var"] = cfg.ppo.init_log_var;

  json& run = j["run"];
  run["master_seed"] = cfg.run.master_seed;
  run["workers"] = cfg.run.workers;
  run["episode_budget"] = cfg.run.episode_budget;
  run["checkpoint_interval_updates"] = cfg.run.checkpoint_interval_updates;
  run["lqr_gain_file"] = cfg.run.lqr_gain_file;
  run["run_dir"] = cfg.run.run_dir;

  return j;
}

void save_config(const ProjectConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write " + path.string());
  out << config_to_json(cfg).dump(2) << "\n";
  if (!out) throw ConfigError("config: failed while writing " + path.string());
}

uint64_t config_hash(const ProjectConfig& cfg) {
  const json all = config_to_json(cfg);
  json h;
  h["scenario"] = all.at("scenario");
  h["reward"] = all.at("reward");
  h["lqr"] = all.at("lqr");
  h["ppo"] = all.at("ppo");
  h["master_seed"] = cfg.run.master_seed;
  return fnv1a64(h.dump());
}

std::string config_hash_hex(uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

std::string config_hash_hex(const ProjectConfig& cfg) {
  return config_hash_hex(config_hash(cfg));
}

}  // namespace dockrl
