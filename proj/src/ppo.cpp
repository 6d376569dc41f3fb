#include "dockrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "dockrl/errors.hpp"

namespace dockrl {

void PpoHyperparams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ConfigError("ppo: epsilon must lie in (0,1)");
  if (!(lr_policy > 0.0) || !(lr_value > 0.0))
    throw ConfigError("ppo: learning rates must be positive");
  if (!(kl_target > 0.0)) throw ConfigError("ppo: kl_target must be positive");
  if (batch_episodes < 1) throw ConfigError("ppo: batch_episodes must be >= 1");
  if (epochs_per_update < 1) throw ConfigError("ppo: epochs_per_update must be >= 1");
  if (minibatch_size < 1) throw ConfigError("ppo: minibatch_size must be >= 1");
  if (!std::isfinite(init_log_var)) throw ConfigError("ppo: init_log_var must be finite");
}

RolloutContext RolloutContext::make(const ScenarioConfig& scenario,
                                    const RewardWeights& reward, const LqrDesign& lqr,
                                    bool training) {
  scenario.validate();
  reward.validate();
  RolloutContext ctx;
  ctx.scenario = scenario;
  ctx.reward = reward;
  ctx.lqr = lqr;
  ctx.r_col = max_collision_distance(scenario);
  ctx.training = training;
  return ctx;
}

EpisodeRecord rollout(const PolicySnapshot& snap, const RolloutContext& ctx,
                      const ChaserState& x0, Rng& rng, bool stochastic) {
  const double dt = ctx.scenario.dt_s;
  const double t_limit =
      ctx.training ? ctx.scenario.t_limit_train_s : ctx.scenario.t_limit_test_s;
  const int t_max = static_cast<int>(std::floor(t_limit / dt + 0.5));
  if (t_max < 1) throw std::invalid_argument("rollout: time limit shorter than one step");

  Eigen::MatrixXd obs(kObservationDim, t_max);
  Eigen::MatrixXd actions(kActionDim, t_max);
  Eigen::VectorXd logprobs(t_max), r1(t_max), values(t_max);
  Eigen::VectorXd r2 = Eigen::VectorXd::Zero(t_max);

  EpisodeRecord ep;
  ep.states.reserve(static_cast<size_t>(t_max) + 1);
  ChaserState x = x0;
  ep.states.push_back(x);

  int steps = 0;
  for (int t = 0; t < t_max; ++t) {
    const Eigen::VectorXd o = observation(x);
    const Eigen::VectorXd on = snap.normalize_observation(o);
    const Eigen::VectorXd mean = forward(snap.policy, on);
    const Eigen::VectorXd raw =
        stochastic ? sample_action(mean, snap.log_var, rng) : mean;

    const ControlAction u = scale_action(raw, ctx.scenario.f_max_n, ctx.scenario.l_max_nm);
    Vector6d u6;
    u6 << u.force, u.torque;

    const CollisionCheck col = check_collision(x, ctx.scenario);
    ep.collided = ep.collided || col.collided;
    const Eigen::Vector3d accel_actual = u.force / ctx.scenario.mass_props.mass_kg;
    const Eigen::Vector3d accel_ref = reference_accel(ctx.lqr, x.r, x.v);
    const ShapingTerms st = shaping_terms(x, u6, accel_actual, accel_ref, col.collided,
                                          col.r_p_norm, ctx.r_col, ctx.reward);
    ep.sum_lqr += st.lqr;
    ep.sum_attitude += st.attitude;
    ep.sum_control += st.control;
    ep.sum_collision += st.collision;

    obs.col(t) = o;
    actions.col(t) = raw;
    logprobs[t] = gaussian_logprob(mean, snap.log_var, raw);
    values[t] = forward(snap.value, on)(0, 0);
    r1[t] = st.total;

    x = step(x, u, ctx.scenario.mass_props, dt);
    ep.states.push_back(x);
    steps = t + 1;

    if (check_docking(x, ctx.scenario).success) {
      r2[t] = terminal_bonus(true, ctx.reward);
      ep.docked = true;
      break;
    }
  }
  ep.collided = ep.collided || check_collision(x, ctx.scenario).collided;

  ep.obs = obs.leftCols(steps);
  ep.actions = actions.leftCols(steps);
  ep.logprobs = logprobs.head(steps);
  ep.r1 = r1.head(steps);
  ep.r2 = r2.head(steps);
  ep.values = values.head(steps);
  return ep;
}

ReturnsAdvantages returns_and_advantages(const EpisodeRecord& ep, double gamma1,
                                         double gamma2) {
  const int n = ep.steps();
  if (n < 1) throw std::invalid_argument("returns: empty episode");
  if (ep.r2.size() != n || ep.values.size() != n)
    throw std::invalid_argument("returns: inconsistent episode arrays");
  ReturnsAdvantages out;
  out.returns.resize(n);
  double acc1 = 0.0, acc2 = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    acc1 = ep.r1[t] + gamma1 * acc1;
    acc2 = ep.r2[t] + gamma2 * acc2;
    out.returns[t] = acc1 + acc2;
  }
  out.advantages = out.returns - ep.values;
  return out;
}

Batch assemble_batch(const std::vector<EpisodeRecord>& episodes, double gamma1,
                     double gamma2, bool normalize_advantages) {
  int total = 0;
  for (const auto& ep : episodes) total += ep.steps();
  if (total < 1) throw std::invalid_argument("batch: no transitions");

  Batch b;
  b.obs.resize(kObservationDim, total);
  b.actions.resize(kActionDim, total);
  b.returns.resize(total);
  b.advantages.resize(total);
  b.episode_starts.reserve(episodes.size());

  int at = 0;
  for (const auto& ep : episodes) {
    const int n = ep.steps();
    if (n < 1) throw std::invalid_argument("batch: empty episode");
    b.episode_starts.push_back(at);
    b.obs.middleCols(at, n) = ep.obs;
    b.actions.middleCols(at, n) = ep.actions;
    const ReturnsAdvantages ra = returns_and_advantages(ep, gamma1, gamma2);
    b.returns.segment(at, n) = ra.returns;
    b.advantages.segment(at, n) = ra.advantages;
    at += n;
  }

  if (normalize_advantages) {
    const double mean = b.advantages.mean();
    const double std =
        std::sqrt((b.advantages.array() - mean).square().sum() / double(total));
    b.advantages = (b.advantages.array() - mean) / (std + 1e-8);
  }
  return b;
}

double ppo_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

SurrogateGradient policy_surrogate_gradient(const Mlp& policy, const Eigen::VectorXd& log_var,
                                            const Eigen::MatrixXd& x,
                                            const Eigen::MatrixXd& actions,
                                            const Eigen::VectorXd& advantages,
                                            const Eigen::VectorXd& lp_old, double epsilon) {
  const int len = static_cast<int>(x.cols());
  if (len < 1) throw std::invalid_argument("surrogate: empty minibatch");
  if (actions.cols() != len || advantages.size() != len || lp_old.size() != len)
    throw std::invalid_argument("surrogate: inconsistent minibatch arrays");
  if (log_var.size() != actions.rows())
    throw std::invalid_argument("surrogate: log-variance size mismatch");
  const int np = param_count(policy);
  const int na = static_cast<int>(log_var.size());

  ForwardCache cache;
  SurrogateGradient out;
  out.means = forward(policy, x, &cache);
  const Eigen::VectorXd lp_new = gaussian_logprob_batch(out.means, log_var, actions);
  const Eigen::ArrayXd ratio = (lp_new - lp_old).array().exp();
  out.max_ratio_dev = (ratio - 1.0).abs().maxCoeff();

  const double m_inv = 1.0 / static_cast<double>(len);
  Eigen::ArrayXd coef(len);
  double objective = 0.0;
  for (int i = 0; i < len; ++i) {
    objective += ppo_surrogate(ratio[i], advantages[i], epsilon);
    const bool clipped_out = (advantages[i] > 0.0 && ratio[i] > 1.0 + epsilon) ||
                             (advantages[i] < 0.0 && ratio[i] < 1.0 - epsilon);
    coef[i] = clipped_out ? 0.0 : advantages[i] * ratio[i];
  }
  out.objective = objective * m_inv;

  const Eigen::ArrayXXd diff = (actions - out.means).array();
  const Eigen::ArrayXd inv_var = (-log_var.array()).exp();
  // d(-J)/d(mean): -coef_i * (a - mu)_ki * exp(-lv_k) / len.
  const Eigen::MatrixXd dy =
      (-m_inv) * ((diff.rowwise() * coef.transpose()).colwise() * inv_var).matrix();
  // d(-J)/d(log_var_k): -sum_i coef_i * 0.5*((a-mu)^2 exp(-lv) - 1) / len.
  const Eigen::ArrayXXd z = diff.square().colwise() * inv_var;
  const Eigen::VectorXd dlv =
      (-0.5 * m_inv) * ((z.matrix() * coef.matrix()).array() - coef.sum()).matrix();

  const std::vector<Layer> grads = backward(policy, cache, dy);
  out.grad.resize(np + na);
  out.grad.head(np) = flatten_grads(grads);
  out.grad.tail(na) = dlv;
  return out;
}

double gaussian_kl_mean(const Eigen::MatrixXd& mean_old, const Eigen::VectorXd& log_var_old,
                        const Eigen::MatrixXd& mean_new,
                        const Eigen::VectorXd& log_var_new) {
  if (mean_old.rows() != mean_new.rows() || mean_old.cols() != mean_new.cols())
    throw std::invalid_argument("kl: mean shape mismatch");
  if (log_var_old.size() != mean_old.rows() || log_var_new.size() != mean_old.rows())
    throw std::invalid_argument("kl: log-variance size mismatch");
  const Eigen::Index n = mean_old.cols();
  if (n == 0) throw std::invalid_argument("kl: empty batch");

  const Eigen::ArrayXd lvo = log_var_old.array();
  const Eigen::ArrayXd lvn = log_var_new.array();
  // Per-dimension part independent of the means: log(vn/vo) + vo/vn - 1.
  const double fixed = (lvn - lvo + (lvo - lvn).exp() - 1.0).sum();
  const Eigen::ArrayXd inv_var_new = (-lvn).exp();
  const Eigen::ArrayXXd diff2 = (mean_old - mean_new).array().square();
  const double mean_part =
      (diff2.colwise() * inv_var_new).sum() / static_cast<double>(n);
  return 0.5 * (fixed + mean_part);
}

namespace {

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

struct Gathered {
  Eigen::MatrixXd x;    // normalized observations
  Eigen::MatrixXd a;    // raw actions
  Eigen::VectorXd adv;  // advantages
  Eigen::VectorXd ret;  // returns
};

Gathered gather(const Eigen::MatrixXd& xn, const Batch& batch, const std::vector<int>& order,
                int begin, int len) {
  Gathered g;
  g.x.resize(xn.rows(), len);
  g.a.resize(batch.actions.rows(), len);
  g.adv.resize(len);
  g.ret.resize(len);
  for (int i = 0; i < len; ++i) {
    const int c = order[begin + i];
    g.x.col(i) = xn.col(c);
    g.a.col(i) = batch.actions.col(c);
    g.adv[i] = batch.advantages[c];
    g.ret[i] = batch.returns[c];
  }
  return g;
}

}  // namespace

UpdateDiagnostics update(const Batch& batch, PolicySnapshot& snap, AdamState& adam_policy,
                         AdamState& adam_value, const PpoHyperparams& hyper, Rng& rng) {
  hyper.validate();
  const int n = batch.size();
  if (n < 1) throw std::invalid_argument("ppo update: empty batch");
  if (batch.obs.cols() != n || batch.actions.cols() != n)
    throw std::invalid_argument("ppo update: inconsistent batch arrays");
  const int np = param_count(snap.policy);
  const int nv = param_count(snap.value);
  if (adam_policy.m.size() != np + kActionDim)
    throw std::invalid_argument("ppo update: policy Adam state size mismatch");
  if (adam_value.m.size() != nv)
    throw std::invalid_argument("ppo update: value Adam state size mismatch");

  // Entry copies for the non-finite abort path.
  const Mlp policy0 = snap.policy;
  const Mlp value0 = snap.value;
  const Eigen::VectorXd log_var0 = snap.log_var;
  const AdamState adam_policy0 = adam_policy;
  const AdamState adam_value0 = adam_value;

  const Eigen::MatrixXd xn = snap.normalize_observations(batch.obs);
  const Eigen::MatrixXd mean_old_full = forward(snap.policy, xn);

  const int mb = std::min(hyper.minibatch_size, n);
  auto chunk_list = [mb, n]() {
    std::vector<std::pair<int, int>> chunks;
    for (int b = 0; b < n; b += mb) chunks.emplace_back(b, std::min(mb, n - b));
    return chunks;
  }();

  // Old log-probabilities and means are evaluated through the exact gathered
  // minibatch forwards replayed on the first epoch, so the first minibatch
  // reproduces them bit for bit regardless of GEMM kernel selection.
  const std::vector<int> order0 = shuffled_indices(n, rng);
  Eigen::VectorXd lp_old(n);
  Eigen::MatrixXd mean_old_gathered(kActionDim, n);
  for (const auto& [begin, len] : chunk_list) {
    const Gathered g = gather(xn, batch, order0, begin, len);
    const Eigen::MatrixXd mu = forward(snap.policy, g.x);
    const Eigen::VectorXd lp = gaussian_logprob_batch(mu, snap.log_var, g.a);
    for (int i = 0; i < len; ++i) {
      lp_old[order0[begin + i]] = lp[i];
      mean_old_gathered.col(order0[begin + i]) = mu.col(i);
    }
  }

  UpdateDiagnostics diag;
  Eigen::VectorXd theta(np + kActionDim);
  Eigen::VectorXd wv(nv);

  bool first_minibatch = true;
  for (int e = 0; e < hyper.epochs_per_update; ++e) {
    const std::vector<int> order = (e == 0) ? order0 : shuffled_indices(n, rng);
    for (const auto& [begin, len] : chunk_list) {
      const Gathered g = gather(xn, batch, order, begin, len);
      Eigen::VectorXd lp_old_mb(len);
      for (int i = 0; i < len; ++i) lp_old_mb[i] = lp_old[order[begin + i]];

      // Policy: ascent on the clipped surrogate over this minibatch.
      const SurrogateGradient sg = policy_surrogate_gradient(
          snap.policy, snap.log_var, g.x, g.a, g.adv, lp_old_mb, hyper.epsilon);

      if (first_minibatch) {
        first_minibatch = false;
        diag.first_minibatch_max_ratio_dev = sg.max_ratio_dev;
        Eigen::MatrixXd mu_old_mb(kActionDim, len);
        for (int i = 0; i < len; ++i)
          mu_old_mb.col(i) = mean_old_gathered.col(order[begin + i]);
        diag.first_minibatch_kl = gaussian_kl_mean(mu_old_mb, log_var0, sg.means, snap.log_var);
      }

      theta.head(np) = flatten_params(snap.policy);
      theta.tail(kActionDim) = snap.log_var;
      adam_step(theta, sg.grad, adam_policy, hyper.lr_policy);
      unflatten_params(theta.head(np), snap.policy);
      snap.log_var = theta.tail(kActionDim);

      // Value: descent on 0.5 * mean (v - G)^2.
      ForwardCache vc;
      const Eigen::MatrixXd v = forward(snap.value, g.x, &vc);
      const Eigen::MatrixXd dyv = (v.row(0).transpose() - g.ret).transpose() /
                                  static_cast<double>(len);
      const std::vector<Layer> vgrads = backward(snap.value, vc, dyv);
      wv = flatten_params(snap.value);
      adam_step(wv, flatten_grads(vgrads), adam_value, hyper.lr_value);
      unflatten_params(wv, snap.value);
    }

    const Eigen::MatrixXd mean_new_full = forward(snap.policy, xn);
    const double kl = gaussian_kl_mean(mean_old_full, log_var0, mean_new_full, snap.log_var);
    const Eigen::MatrixXd v_full = forward(snap.value, xn);
    const double vloss =
        0.5 * (v_full.row(0).transpose() - batch.returns).squaredNorm() / double(n);

    diag.epochs_run = e + 1;
    diag.epoch_kl.push_back(kl);
    diag.epoch_value_loss.push_back(vloss);
    diag.kl = kl;
    diag.value_loss = vloss;

    const bool finite = std::isfinite(kl) && std::isfinite(vloss) &&
                        snap.policy.all_finite() && snap.value.all_finite() &&
                        snap.log_var.allFinite();
    if (!finite) {
      snap.policy = policy0;
      snap.value = value0;
      snap.log_var = log_var0;
      adam_policy = adam_policy0;
      adam_value = adam_value0;
      diag.aborted = true;
      break;
    }
    if (kl > 4.0 * hyper.kl_target) {
      diag.early_stopped = true;
      break;
    }
  }
  return diag;
}

PpoHyperparams adapt_kl(double observed_kl, PpoHyperparams hyper) {
  if (!(observed_kl >= 0.0))
    throw std::invalid_argument("adapt_kl: observed KL must be non-negative");
  if (observed_kl > 2.0 * hyper.kl_target) {
    hyper.lr_policy /= 1.5;
    hyper.epsilon = std::max(hyper.epsilon / 1.2, 0.05);
  } else if (observed_kl < 0.5 * hyper.kl_target) {
    hyper.lr_policy *= 1.5;
    hyper.epsilon = std::min(hyper.epsilon * 1.2, 0.4);
  }
  return hyper;
}

std::vector<ChaserState> corner_cases(const ScenarioConfig& cfg) {
  const InitialConditionRange& r = cfg.ic_test;
  const Quat q_center =
      Quat::from_euler_xyz(r.euler_center_deg * M_PI / 180.0).normalized();

  std::vector<ChaserState> out;
  out.reserve(128);
  for (int mask = 0; mask < 128; ++mask) {
    const auto pick = [mask](int bit, double center, double halfwidth) {
      return ((mask >> bit) & 1) ? center + halfwidth : center - halfwidth;
    };
    ChaserState s;
    s.r = Eigen::Vector3d(pick(0, r.r_center_m[0], r.r_halfwidth_m[0]), r.r_center_m[1],
                          r.r_center_m[2]);
    s.v = Eigen::Vector3d(pick(1, r.v_center_ms[0], r.v_halfwidth_ms[0]),
                          pick(2, r.v_center_ms[1], r.v_halfwidth_ms[1]),
                          pick(3, r.v_center_ms[2], r.v_halfwidth_ms[2]));
    s.q = q_center;
    s.w = Eigen::Vector3d(pick(4, r.w_center_degs[0], r.w_halfwidth_degs[0]),
                          pick(5, r.w_center_degs[1], r.w_halfwidth_degs[1]),
                          pick(6, r.w_center_degs[2], r.w_halfwidth_degs[2])) *
          (M_PI / 180.0);
    out.push_back(s);
  }
  return out;
}

int corner_case_eval(const PolicySnapshot& snap, const RolloutContext& test_ctx) {
  Rng rng(0);  // never consumed: deterministic rollouts
  int docks = 0;
  for (const ChaserState& x0 : corner_cases(test_ctx.scenario)) {
    const EpisodeRecord ep = rollout(snap, test_ctx, x0, rng, false);
    if (ep.docked) ++docks;
  }
  return docks;
}

}  // namespace dockrl
