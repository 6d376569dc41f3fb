#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dockrl/dynamics.hpp"
#include "dockrl/rng.hpp"

namespace dockrl {

// Dense layer; batches are stored one sample per column, so a forward pass is
// W * X + b with b broadcast.
struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
};

// Feedforward net, tanh on hidden layers and linear output. Parameters are
// plain values: snapshots are copies, safe to read from many threads.
struct Mlp {
  std::vector<Layer> layers;

  // dims = {input, hidden..., output}; weights drawn uniform within
  // +-sqrt(1/fan_in) row by row, biases zero. Deterministic in rng.
  static Mlp make(const std::vector<int>& dims, Rng& rng);

  int input_dim() const { return int(layers.front().W.cols()); }
  int output_dim() const { return int(layers.back().W.rows()); }
  bool all_finite() const;
};

// Activations kept for the backward pass: acts[0] is the input batch,
// acts[i] the output of layer i (tanh already applied on hidden layers).
struct ForwardCache {
  std::vector<Eigen::MatrixXd> acts;
};

// Throws std::invalid_argument on input dimension mismatch.
Eigen::MatrixXd forward(const Mlp& net, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        ForwardCache* cache = nullptr);

// Exact reverse-mode gradients for the cached forward pass; dy matches the
// output batch shape. Gradients sum over the batch.
std::vector<Layer> backward(const Mlp& net, const ForwardCache& cache,
                            const Eigen::Ref<const Eigen::MatrixXd>& dy);

// Row-major flattening (per layer: W rows then b) shared by Adam and the
// checkpoint format.
Eigen::VectorXd flatten_params(const Mlp& net);
Eigen::VectorXd flatten_grads(const std::vector<Layer>& grads);
void unflatten_params(const Eigen::Ref<const Eigen::VectorXd>& flat, Mlp& net);
int param_count(const Mlp& net);

// Adam with bias correction; adam_step descends, callers negate the gradient
// for ascent.
struct AdamState {
  Eigen::VectorXd m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(int n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamState& state, double lr);

// Diagonal-Gaussian action head utilities. log_var is state independent.
double gaussian_logprob(const Eigen::Ref<const Eigen::VectorXd>& mean,
                        const Eigen::Ref<const Eigen::VectorXd>& log_var,
                        const Eigen::Ref<const Eigen::VectorXd>& action);

// One log-probability per column of means/actions.
Eigen::VectorXd gaussian_logprob_batch(const Eigen::Ref<const Eigen::MatrixXd>& means,
                                       const Eigen::Ref<const Eigen::VectorXd>& log_var,
                                       const Eigen::Ref<const Eigen::MatrixXd>& actions);

// mean + sqrt(exp(log_var)) .* standard normal; zero variance reproduces the
// mean exactly.
Eigen::VectorXd sample_action(const Eigen::Ref<const Eigen::VectorXd>& mean,
                              const Eigen::Ref<const Eigen::VectorXd>& log_var, Rng& rng);

// Raw net output to physical command: first three components scale with the
// force limits, last three with the torque limits, clamped to the limits so
// |raw| > 1 saturates.
ControlAction scale_action(const Eigen::Ref<const Eigen::VectorXd>& raw,
                           const Eigen::Vector3d& f_max, const Eigen::Vector3d& l_max);

// Running mean/variance of observed inputs (Welford/Chan moments). count is a
// double so it stays exact far beyond any episode budget.
struct RunningNormalizer {
  double count = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;  // sum of squared deviations from the mean

  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim)
      : mean(Eigen::VectorXd::Zero(dim)), m2(Eigen::VectorXd::Zero(dim)) {}

  void update(const Eigen::Ref<const Eigen::VectorXd>& x);
  void update_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs);  // one sample per column

  // sqrt(m2 / max(count-1, 1)) floored at 1e-6
  Eigen::VectorXd stddev() const;

  // (x - mean) / std; an empty normalizer (count 0) passes input through
  Eigen::VectorXd normalize(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd normalize_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs) const;

  static RunningNormalizer merged(const RunningNormalizer& a, const RunningNormalizer& b);
};

}  // namespace dockrl
