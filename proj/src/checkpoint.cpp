#include "dockrl/checkpoint.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <system_error>
#include <utility>

#include <json.hpp>

#include "dockrl/config.hpp"
#include "dockrl/errors.hpp"
#include "dockrl/ioutil.hpp"

namespace dockrl {
namespace {

using nlohmann::json;

long long as_integer(const json& j, const std::string& name) {
  if (!j.is_number_integer()) throw ConfigError(name + ": expected an integer");
  return j.get<long long>();
}

double as_double(const json& j, const std::string& name) {
  if (!j.is_number()) throw ConfigError(name + ": expected a number");
  return j.get<double>();
}

uint64_t parse_hash_hex(const json& j, const std::string& name) {
  if (!j.is_string()) throw ConfigError(name + ": expected a hex string");
  const std::string s = j.get<std::string>();
  if (s.size() != 16) throw ConfigError(name + ": expected 16 hex digits");
  uint64_t h = 0;
  for (char c : s) {
    if (!std::isxdigit(static_cast<unsigned char>(c)))
      throw ConfigError(name + ": expected 16 hex digits");
    h = (h << 4) | uint64_t(std::stoul(std::string(1, c), nullptr, 16));
  }
  return h;
}

json mlp_to_json(const Mlp& net) {
  json layers = json::array();
  for (const auto& l : net.layers) {
    json jl;
    jl["W"] = to_json_matrix(l.W);
    jl["b"] = to_json_vector(l.b);
    layers.push_back(std::move(jl));
  }
  json j;
  j["layers"] = std::move(layers);
  return j;
}

// Layer sizes are inferred from the stored matrices; only the external
// contract (input/output widths, consistent chaining) is enforced.
Mlp mlp_from_json(const json& j, Eigen::Index in_dim, Eigen::Index out_dim,
                  const std::string& name) {
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array() ||
      j["layers"].empty())
    throw ConfigError(name + ": expected an object with a non-empty layers array");
  Mlp net;
  Eigen::Index prev = in_dim;
  const auto& jlayers = j["layers"];
  for (size_t i = 0; i < jlayers.size(); ++i) {
    const std::string lname = name + ".layers[" + std::to_string(i) + "]";
    const auto& jl = jlayers[i];
    if (!jl.is_object()) throw ConfigError(lname + ": expected an object");
    const auto& jw = jl.at("W");
    if (!jw.is_array() || jw.empty() || !jw[0].is_array())
      throw ConfigError(lname + ".W: expected a non-empty nested array");
    const Eigen::Index rows = Eigen::Index(jw.size());
    const Eigen::Index cols = Eigen::Index(jw[0].size());
    if (cols != prev)
      throw ConfigError(lname + ".W: has " + std::to_string(cols) + " columns, expected " +
                        std::to_string(prev));
    Layer layer;
    layer.W = matrix_from_json(jw, rows, cols, lname + ".W");
    layer.b = vector_from_json(jl.at("b"), rows, lname + ".b");
    prev = rows;
    net.layers.push_back(std::move(layer));
  }
  if (prev != out_dim)
    throw ConfigError(name + ": output dim " + std::to_string(prev) + ", expected " +
                      std::to_string(out_dim));
  if (!net.all_finite()) throw ConfigError(name + ": non-finite parameters");
  return net;
}

json normalizer_to_json(const RunningNormalizer& n) {
  json j;
  j["count"] = n.count;
  j["mean"] = to_json_vector(n.mean);
  j["m2"] = to_json_vector(n.m2);
  return j;
}

RunningNormalizer normalizer_from_json(const json& j, Eigen::Index dim,
                                       const std::string& name) {
  RunningNormalizer n{int(dim)};
  n.count = as_double(j.at("count"), name + ".count");
  n.mean = vector_from_json(j.at("mean"), dim, name + ".mean");
  n.m2 = vector_from_json(j.at("m2"), dim, name + ".m2");
  if (!std::isfinite(n.count) || n.count < 0.0)
    throw ConfigError(name + ".count: must be finite and non-negative");
  if (!n.mean.allFinite() || !n.m2.allFinite())
    throw ConfigError(name + ": non-finite moments");
  if (dim > 0 && n.m2.minCoeff() < 0.0)
    throw ConfigError(name + ".m2: negative squared-deviation sum");
  return n;
}

json adam_to_json(const AdamState& a) {
  json j;
  j["m"] = to_json_vector(a.m);
  j["v"] = to_json_vector(a.v);
  j["step"] = a.step;
  return j;
}

AdamState adam_from_json(const json& j, Eigen::Index n, const std::string& name) {
  AdamState a{int(n)};
  a.m = vector_from_json(j.at("m"), n, name + ".m");
  a.v = vector_from_json(j.at("v"), n, name + ".v");
  a.step = long(as_integer(j.at("step"), name + ".step"));
  if (a.step < 0) throw ConfigError(name + ".step: must be non-negative");
  if (!a.m.allFinite() || !a.v.allFinite())
    throw ConfigError(name + ": non-finite optimizer moments");
  if (n > 0 && a.v.minCoeff() < 0.0)
    throw ConfigError(name + ".v: negative second moment");
  return a;
}

}  // namespace

void save_checkpoint(const TrainingCheckpoint& ck, const std::filesystem::path& path) {
  json j;
  j["format_version"] = 1;
  j["config_hash"] = config_hash_hex(ck.config_hash);
  j["update_index"] = ck.update_index;
  j["episode_count"] = ck.episode_count;
  j["best_corner_docks"] = ck.best_corner_docks;
  json snap;
  snap["policy"] = mlp_to_json(ck.snapshot.policy);
  snap["value"] = mlp_to_json(ck.snapshot.value);
  snap["log_var"] = to_json_vector(ck.snapshot.log_var);
  snap["norm"] = normalizer_to_json(ck.snapshot.norm);
  snap["normalize_quat"] = ck.snapshot.normalize_quat;
  j["snapshot"] = std::move(snap);
  j["lqr"] = lqr_design_to_json(ck.lqr);
  j["adam_policy"] = adam_to_json(ck.adam_policy);
  j["adam_value"] = adam_to_json(ck.adam_value);
  j["lr_policy"] = ck.lr_policy;
  j["lr_value"] = ck.lr_value;
  j["epsilon"] = ck.epsilon;

  // Write to a sibling temp file and rename into place so a crash mid-write
  // never leaves a truncated checkpoint behind.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + tmp.string() + " for writing");
    f << j.dump(2) << '\n';
    f.flush();
    if (!f) throw ConfigError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw ConfigError("cannot move " + tmp.string() + " to " + path.string() + ": " +
                      ec.message());
}

TrainingCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint " + path.string() + ": " + e.what());
  }
  const std::string ctx = "checkpoint " + path.string();
  TrainingCheckpoint ck;
  try {
    if (as_integer(j.at("format_version"), ctx + ".format_version") != 1)
      throw ConfigError(ctx + ": unknown format_version");
    ck.config_hash = parse_hash_hex(j.at("config_hash"), ctx + ".config_hash");
    ck.update_index = long(as_integer(j.at("update_index"), ctx + ".update_index"));
    ck.episode_count = long(as_integer(j.at("episode_count"), ctx + ".episode_count"));
    ck.best_corner_docks =
        int(as_integer(j.at("best_corner_docks"), ctx + ".best_corner_docks"));
    if (ck.update_index < 0 || ck.episode_count < 0)
      throw ConfigError(ctx + ": negative progress counters");
    if (ck.best_corner_docks < -1)
      throw ConfigError(ctx + ".best_corner_docks: below -1");

    const auto& snap = j.at("snapshot");
    ck.snapshot.policy =
        mlp_from_json(snap.at("policy"), kObservationDim, kActionDim, ctx + ".snapshot.policy");
    ck.snapshot.value =
        mlp_from_json(snap.at("value"), kObservationDim, 1, ctx + ".snapshot.value");
    ck.snapshot.log_var =
        vector_from_json(snap.at("log_var"), kActionDim, ctx + ".snapshot.log_var");
    if (!ck.snapshot.log_var.allFinite())
      throw ConfigError(ctx + ".snapshot.log_var: non-finite entries");
    ck.snapshot.norm =
        normalizer_from_json(snap.at("norm"), kObservationDim, ctx + ".snapshot.norm");
    if (!snap.at("normalize_quat").is_boolean())
      throw ConfigError(ctx + ".snapshot.normalize_quat: expected a boolean");
    ck.snapshot.normalize_quat = snap.at("normalize_quat").get<bool>();

    ck.lqr = lqr_design_from_json(j.at("lqr"), ctx + ".lqr");

    const Eigen::Index np = param_count(ck.snapshot.policy) + kActionDim;
    const Eigen::Index nv = param_count(ck.snapshot.value);
    ck.adam_policy = adam_from_json(j.at("adam_policy"), np, ctx + ".adam_policy");
    ck.adam_value = adam_from_json(j.at("adam_value"), nv, ctx + ".adam_value");

    ck.lr_policy = as_double(j.at("lr_policy"), ctx + ".lr_policy");
    ck.lr_value = as_double(j.at("lr_value"), ctx + ".lr_value");
    ck.epsilon = as_double(j.at("epsilon"), ctx + ".epsilon");
  } catch (const json::exception& e) {
    throw ConfigError(ctx + ": " + e.what());
  }
  if (!std::isfinite(ck.lr_policy) || ck.lr_policy <= 0.0)
    throw ConfigError(ctx + ".lr_policy: must be finite and positive");
  if (!std::isfinite(ck.lr_value) || ck.lr_value <= 0.0)
    throw ConfigError(ctx + ".lr_value: must be finite and positive");
  if (!std::isfinite(ck.epsilon) || ck.epsilon <= 0.0 || ck.epsilon >= 1.0)
    throw ConfigError(ctx + ".epsilon: must lie in (0, 1)");
  return ck;
}

}  // namespace dockrl
