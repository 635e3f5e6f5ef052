#include "sango/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sango/error.hpp"

namespace sango {

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw Error(ErrorCode::InvalidConfig, "network needs at least an input and output layer");
  if (std::any_of(sizes_.begin(), sizes_.end(), [](int s) { return s <= 0; })) {
    throw Error(ErrorCode::InvalidConfig, "layer widths must be positive");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l] + 1) * static_cast<std::size_t>(sizes_[l + 1]);
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::random(std::vector<int> sizes, Rng& rng, double hidden_gain, double output_gain) {
  Mlp net(std::move(sizes));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double gain = l + 1 == net.num_layers() ? output_gain : hidden_gain;
    const double scale = gain / std::sqrt(static_cast<double>(net.sizes_[l]));
    for (double& w : net.weights(l)) w = scale * rng.normal();
  }
  return net;
}

std::span<double> Mlp::weights(std::size_t layer) {
  return std::span<double>(params_).subspan(weight_offset(layer), bias_offset(layer) - weight_offset(layer));
}
std::span<const double> Mlp::weights(std::size_t layer) const {
  return std::span<const double>(params_).subspan(weight_offset(layer), bias_offset(layer) - weight_offset(layer));
}
std::span<double> Mlp::bias(std::size_t layer) {
  return std::span<double>(params_).subspan(bias_offset(layer), static_cast<std::size_t>(sizes_[layer + 1]));
}
std::span<const double> Mlp::bias(std::size_t layer) const {
  return std::span<const double>(params_).subspan(bias_offset(layer), static_cast<std::size_t>(sizes_[layer + 1]));
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Trace trace;
  forward(input, trace);
  return std::move(trace.back());
}

void Mlp::forward(std::span<const double> input, Trace& trace) const {
  trace.resize(sizes_.size());
  trace[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    const std::span<const double> w = weights(l);
    const std::span<const double> b = bias(l);
    const std::vector<double>& a = trace[l];
    std::vector<double>& z = trace[l + 1];
    z.resize(out);
    const bool hidden = l + 1 < num_layers();
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w.data() + o * in;
      double sum = b[o];
      for (std::size_t i = 0; i < in; ++i) sum += row[i] * a[i];
      z[o] = hidden ? std::tanh(sum) : sum;
    }
  }
}

void Mlp::backward(const Trace& trace, std::span<const double> grad_output, std::span<double> grad) const {
  std::vector<double> g(grad_output.begin(), grad_output.end());
  std::vector<double> g_prev;
  for (std::size_t l = num_layers(); l-- > 0;) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    const std::vector<double>& a = trace[l];
    double* gw = grad.data() + weight_offset(l);
    double* gb = grad.data() + bias_offset(l);
    for (std::size_t o = 0; o < out; ++o) {
      double* row = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) row[i] += g[o] * a[i];
      gb[o] += g[o];
    }
    if (l == 0) break;
    const std::span<const double> w = weights(l);
    g_prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) g_prev[i] += row[i] * g[o];
    }
    for (std::size_t i = 0; i < in; ++i) g_prev[i] *= 1.0 - a[i] * a[i];
    g.swap(g_prev);
  }
}

// ---------------------------------------------------------------------------
// Policy

PolicyParams zero_policy(int obs_len, int hidden, int num_actions) {
  return {Mlp({obs_len, hidden, hidden, num_actions}), Mlp({obs_len, hidden, hidden, 1})};
}

PolicyParams random_policy(int obs_len, int hidden, std::uint64_t seed, int num_actions) {
  Rng rng(seed);
  const double hidden_gain = std::sqrt(2.0);
  Mlp actor = Mlp::random({obs_len, hidden, hidden, num_actions}, rng, hidden_gain, 0.01);
  Mlp critic = Mlp::random({obs_len, hidden, hidden, 1}, rng, hidden_gain, 1.0);
  return {std::move(actor), std::move(critic)};
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - peak);
  const double lse = peak + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - lse;
  return out;
}

namespace {

void check_obs(const PolicyParams& params, std::span<const double> obs) {
  if (obs.size() != params.observation_size()) {
    throw Error(ErrorCode::ShapeMismatch, "observation length " + std::to_string(obs.size()) +
                                              " but network expects " + std::to_string(params.observation_size()));
  }
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p = log_softmax(logits);
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

PolicyOutput policy_forward(const PolicyParams& params, std::span<const double> obs) {
  check_obs(params, obs);
  return {softmax(params.actor.forward(obs)), params.critic.forward(obs)[0]};
}

int greedy_action(std::span<const double> probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

int sample_action(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cumulative += probs[k];
    if (u < cumulative) return static_cast<int>(k);
  }
  // Rounding left u above the final partial sum: take the last non-zero action.
  for (std::size_t k = probs.size(); k-- > 0;) {
    if (probs[k] > 0.0) return static_cast<int>(k);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// GAE and rollouts

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || !(gamma > 0 && gamma <= 1) || !(gae_lambda >= 0 && gae_lambda <= 1) ||
      !(clip_ratio > 0) || rollout_length <= 0 || minibatch_size <= 0 || epochs_per_update <= 0 ||
      entropy_coef < 0 || value_coef < 0 || !(reward_scale > 0) || !(adam_epsilon > 0) || hidden_size <= 0 ||
      total_steps < 0 || eval_interval < 0) {
    throw Error(ErrorCode::InvalidConfig, "invalid training configuration");
  }
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double last_value, double gamma, double lambda) {
  if (rewards.size() != values.size() || rewards.size() != dones.size()) {
    throw Error(ErrorCode::LengthMismatch, "rewards, values and dones must have equal length");
  }
  const std::size_t n = rewards.size();
  GaeResult out{std::vector<double>(n), std::vector<double>(n)};
  double next_value = last_value;
  double next_advantage = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    next_advantage = delta + gamma * lambda * live * next_advantage;
    out.advantages[t] = next_advantage;
    out.returns[t] = next_advantage + values[t];
    next_value = values[t];
  }
  return out;
}

void RolloutBuffer::add(std::span<const double> obs, int action, double log_prob, double reward, double value,
                        bool done) {
  if (obs.size() != obs_len) throw Error(ErrorCode::ShapeMismatch, "observation length differs from buffer");
  observations.insert(observations.end(), obs.begin(), obs.end());
  actions.push_back(action);
  log_probs.push_back(log_prob);
  rewards.push_back(reward);
  values.push_back(value);
  dones.push_back(done ? 1 : 0);
}

void RolloutBuffer::clear() {
  observations.clear();
  actions.clear();
  log_probs.clear();
  rewards.clear();
  values.clear();
  dones.clear();
  advantages.clear();
  returns.clear();
}

void RolloutBuffer::finish(double last_value, double gamma, double lambda) {
  GaeResult gae = compute_gae(rewards, values, dones, last_value, gamma, lambda);
  advantages = std::move(gae.advantages);
  returns = std::move(gae.returns);
}

// ---------------------------------------------------------------------------
// PPO loss

LossBreakdown ppo_loss(const PolicyParams& params, const RolloutBuffer& buffer, std::span<const std::size_t> indices,
                       std::span<const double> advantages, const TrainConfig& config, PolicyGradient* grad) {
  if (indices.empty()) throw Error(ErrorCode::EmptyBatch, "empty minibatch");
  if (advantages.size() != buffer.size() || buffer.returns.size() != buffer.size()) {
    throw Error(ErrorCode::LengthMismatch, "advantages and returns must cover the buffer");
  }
  if (grad != nullptr) {
    grad->actor.assign(params.actor.params().size(), 0.0);
    grad->critic.assign(params.critic.params().size(), 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  const double eps = config.clip_ratio;
  LossBreakdown loss;
  Mlp::Trace actor_trace, critic_trace;
  std::vector<double> g_logits;

  for (const std::size_t idx : indices) {
    const std::span<const double> obs = buffer.observation(idx);
    check_obs(params, obs);
    params.actor.forward(obs, actor_trace);
    params.critic.forward(obs, critic_trace);
    const std::vector<double> logp = log_softmax(actor_trace.back());
    const auto action = static_cast<std::size_t>(buffer.actions[idx]);
    const double log_ratio = logp[action] - buffer.log_probs[idx];
    const double ratio = std::exp(log_ratio);
    const double adv = advantages[idx];

    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    const double s1 = ratio * adv;
    const double s2 = clipped * adv;
    const bool unclipped_branch = s1 <= s2;
    const double surrogate = unclipped_branch ? s1 : s2;
    // d(surrogate)/d(log pi(a)); the clipped branch is flat outside the trust region.
    const double d_surrogate = (unclipped_branch || clipped == ratio) ? ratio * adv : 0.0;

    double entropy = 0.0;
    for (double lp : logp) entropy -= std::exp(lp) * lp;
    const double value = critic_trace.back()[0];
    const double err = value - buffer.returns[idx];

    loss.policy -= surrogate * inv_n;
    loss.value += err * err * inv_n;
    loss.entropy += entropy * inv_n;
    loss.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
    loss.clip_fraction += (std::abs(ratio - 1.0) > eps ? 1.0 : 0.0) * inv_n;

    if (grad != nullptr) {
      g_logits.assign(logp.size(), 0.0);
      for (std::size_t k = 0; k < logp.size(); ++k) {
        const double p = std::exp(logp[k]);
        const double d_logp = (k == action ? 1.0 : 0.0) - p;
        const double d_entropy = -p * (logp[k] + entropy);
        g_logits[k] = (-d_surrogate * d_logp - config.entropy_coef * d_entropy) * inv_n;
      }
      params.actor.backward(actor_trace, g_logits, grad->actor);
      const double g_value = 2.0 * config.value_coef * err * inv_n;
      params.critic.backward(critic_trace, std::span<const double>(&g_value, 1), grad->critic);
    }
  }
  loss.total = loss.policy + config.value_coef * loss.value - config.entropy_coef * loss.entropy;
  return loss;
}

void clip_grad_norm(std::span<double> grad, double max_norm) {
  if (!(max_norm > 0)) return;
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr, double epsilon,
               double beta1, double beta2) {
  if (grad.size() != params.size()) throw Error(ErrorCode::LengthMismatch, "gradient and parameter sizes differ");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.t = 0;
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + epsilon);
  }
}

UpdateStats ppo_update(PolicyParams& params, const RolloutBuffer& buffer, const TrainConfig& config,
                       OptimizerState& optimizer, Rng& rng) {
  const std::size_t n = buffer.size();
  if (n == 0) throw Error(ErrorCode::EmptyBatch, "empty rollout buffer");

  const double mean = std::accumulate(buffer.advantages.begin(), buffer.advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : buffer.advantages) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / n);
  std::vector<double> normalized(n);
  for (std::size_t i = 0; i < n; ++i) normalized[i] = (buffer.advantages[i] - mean) / (stddev + 1e-8);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = std::min(n, static_cast<std::size_t>(config.minibatch_size));
  UpdateStats stats;
  long minibatches = 0;
  PolicyGradient grad;

  for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    long mb = 0;
    for (std::size_t start = 0; start < n; start += batch, ++mb) {
      const std::span<const std::size_t> indices(order.data() + start, std::min(batch, n - start));
      const LossBreakdown loss = ppo_loss(params, buffer, indices, normalized, config, &grad);
      if (!std::isfinite(loss.total)) {
        throw Error(ErrorCode::NonFiniteLoss,
                    "non-finite loss in epoch " + std::to_string(epoch) + ", minibatch " + std::to_string(mb));
      }
      clip_grad_norm(grad.actor, config.max_grad_norm);
      clip_grad_norm(grad.critic, config.max_grad_norm);
      adam_step(params.actor.params(), grad.actor, optimizer.actor, config.learning_rate, config.adam_epsilon);
      adam_step(params.critic.params(), grad.critic, optimizer.critic, config.learning_rate, config.adam_epsilon);

      ++minibatches;
      const double w = 1.0 / static_cast<double>(minibatches);
      stats.policy_loss += (loss.policy - stats.policy_loss) * w;
      stats.value_loss += (loss.value - stats.value_loss) * w;
      stats.entropy += (loss.entropy - stats.entropy) * w;
      stats.approx_kl += (loss.approx_kl - stats.approx_kl) * w;
      stats.clip_fraction += (loss.clip_fraction - stats.clip_fraction) * w;
    }
  }
  return stats;
}

}  // namespace sango
