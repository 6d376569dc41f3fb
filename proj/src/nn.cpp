#include "dockrl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dockrl {

Mlp Mlp::make(const std::vector<int>& dims, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("mlp: need at least input and output dims");
  Mlp net;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] <= 0 || dims[l + 1] <= 0)
      throw std::invalid_argument("mlp: layer dims must be positive");
    Layer layer;
    layer.W.resize(dims[l + 1], dims[l]);
    const double limit = std::sqrt(1.0 / dims[l]);
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c)
        layer.W(r, c) = rng.uniform(-limit, limit);
    layer.b = Eigen::VectorXd::Zero(dims[l + 1]);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

bool Mlp::all_finite() const {
  for (const Layer& l : layers)
    if (!l.W.allFinite() || !l.b.allFinite()) return false;
  return true;
}

Eigen::MatrixXd forward(const Mlp& net, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        ForwardCache* cache) {
  if (net.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (x.rows() != net.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  if (cache) {
    cache->acts.clear();
    cache->acts.reserve(net.layers.size() + 1);
    cache->acts.push_back(x);
  }
  Eigen::MatrixXd a = x;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    Eigen::MatrixXd z = (net.layers[l].W * a).colwise() + net.layers[l].b;
    if (l + 1 < net.layers.size()) z = z.array().tanh();
    if (cache) cache->acts.push_back(z);
    a = std::move(z);
  }
  return a;
}

std::vector<Layer> backward(const Mlp& net, const ForwardCache& cache,
                            const Eigen::Ref<const Eigen::MatrixXd>& dy) {
  const size_t n = net.layers.size();
  if (cache.acts.size() != n + 1) throw std::invalid_argument("backward: stale cache");
  if (dy.rows() != net.output_dim() || dy.cols() != cache.acts.back().cols())
    throw std::invalid_argument("backward: output gradient shape mismatch");

  std::vector<Layer> grads(n);
  Eigen::MatrixXd dz = dy;  // linear output layer
  for (size_t l = n; l-- > 0;) {
    grads[l].W.noalias() = dz * cache.acts[l].transpose();
    grads[l].b = dz.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd da = net.layers[l].W.transpose() * dz;
      // cache.acts[l] holds tanh outputs for hidden layers
      dz = da.array() * (1.0 - cache.acts[l].array().square());
    }
  }
  return grads;
}

int param_count(const Mlp& net) {
  int n = 0;
  for (const Layer& l : net.layers) n += int(l.W.size() + l.b.size());
  return n;
}

Eigen::VectorXd flatten_params(const Mlp& net) {
  Eigen::VectorXd flat(param_count(net));
  Eigen::Index at = 0;
  for (const Layer& l : net.layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) flat[at++] = l.W(r, c);
    flat.segment(at, l.b.size()) = l.b;
    at += l.b.size();
  }
  return flat;
}

Eigen::VectorXd flatten_grads(const std::vector<Layer>& grads) {
  Eigen::Index total = 0;
  for (const Layer& l : grads) total += l.W.size() + l.b.size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (const Layer& l : grads) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) flat[at++] = l.W(r, c);
    flat.segment(at, l.b.size()) = l.b;
    at += l.b.size();
  }
  return flat;
}

void unflatten_params(const Eigen::Ref<const Eigen::VectorXd>& flat, Mlp& net) {
  if (flat.size() != param_count(net))
    throw std::invalid_argument("unflatten: size mismatch");
  Eigen::Index at = 0;
  for (Layer& l : net.layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = flat[at++];
    l.b = flat.segment(at, l.b.size());
    at += l.b.size();
  }
}

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamState& state, double lr) {
  if (state.m.size() == 0) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
  }
  if (params.size() != grad.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: size mismatch");
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v.array() + (1.0 - state.beta2) * grad.array().square();
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  params.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + state.eps);
}

double gaussian_logprob(const Eigen::Ref<const Eigen::VectorXd>& mean,
                        const Eigen::Ref<const Eigen::VectorXd>& log_var,
                        const Eigen::Ref<const Eigen::VectorXd>& action) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  const Eigen::ArrayXd diff = (action - mean).array();
  return -0.5 * (diff.square() * (-log_var.array()).exp() + log_var.array() + kLog2Pi).sum();
}

Eigen::VectorXd gaussian_logprob_batch(const Eigen::Ref<const Eigen::MatrixXd>& means,
                                       const Eigen::Ref<const Eigen::VectorXd>& log_var,
                                       const Eigen::Ref<const Eigen::MatrixXd>& actions) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  if (means.rows() != log_var.size() || actions.rows() != means.rows() ||
      actions.cols() != means.cols())
    throw std::invalid_argument("gaussian_logprob_batch: shape mismatch");
  const Eigen::ArrayXd inv_var = (-log_var.array()).exp();
  const double constant = 0.5 * (log_var.array() + kLog2Pi).sum();
  const Eigen::MatrixXd diff = actions - means;
  Eigen::VectorXd out =
      -0.5 * (diff.array().square().colwise() * inv_var).colwise().sum().transpose();
  out.array() -= constant;
  return out;
}

Eigen::VectorXd sample_action(const Eigen::Ref<const Eigen::VectorXd>& mean,
                              const Eigen::Ref<const Eigen::VectorXd>& log_var, Rng& rng) {
  Eigen::VectorXd out(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    out[i] = mean[i] + std::exp(0.5 * log_var[i]) * rng.gaussian();
  return out;
}

ControlAction scale_action(const Eigen::Ref<const Eigen::VectorXd>& raw,
                           const Eigen::Vector3d& f_max, const Eigen::Vector3d& l_max) {
  if (raw.size() != 6) throw std::invalid_argument("scale_action: expected 6 components");
  ControlAction u;
  for (int i = 0; i < 3; ++i) {
    u.force[i] = std::clamp(raw[i] * f_max[i], -f_max[i], f_max[i]);
    u.torque[i] = std::clamp(raw[i + 3] * l_max[i], -l_max[i], l_max[i]);
  }
  return u;
}

void RunningNormalizer::update(const Eigen::Ref<const Eigen::VectorXd>& x) {
  update_batch(x);
}

void RunningNormalizer::update_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs) {
  if (xs.cols() == 0) return;
  RunningNormalizer batch(int(xs.rows()));
  batch.count = double(xs.cols());
  batch.mean = xs.rowwise().mean();
  batch.m2 = (xs.colwise() - batch.mean).array().square().rowwise().sum();
  *this = merged(*this, batch);
}

RunningNormalizer RunningNormalizer::merged(const RunningNormalizer& a,
                                            const RunningNormalizer& b) {
  if (a.count == 0.0) return b;
  if (b.count == 0.0) return a;
  if (a.mean.size() != b.mean.size())
    throw std::invalid_argument("normalizer merge: dimension mismatch");
  RunningNormalizer out(int(a.mean.size()));
  out.count = a.count + b.count;
  const Eigen::VectorXd delta = b.mean - a.mean;
  out.mean = a.mean + delta * (b.count / out.count);
  out.m2 = a.m2 + b.m2 +
           delta.array().square().matrix() * (a.count * b.count / out.count);
  return out;
}

Eigen::VectorXd RunningNormalizer::stddev() const {
  const double denom = std::max(count - 1.0, 1.0);
  return (m2 / denom).array().sqrt().max(1e-6);
}

Eigen::VectorXd RunningNormalizer::normalize(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (count == 0.0) return x;
  if (x.size() != mean.size())
    throw std::invalid_argument("normalize: dimension mismatch");
  return (x - mean).array() / stddev().array();
}

Eigen::MatrixXd RunningNormalizer::normalize_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& xs) const {
  if (count == 0.0) return xs;
  if (xs.rows() != mean.size())
    throw std::invalid_argument("normalize: dimension mismatch");
  return (xs.colwise() - mean).array().colwise() / stddev().array();
}

}  // namespace dockrl
