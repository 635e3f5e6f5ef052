#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sango/env.hpp"
#include "sango/metrics.hpp"
#include "sango/rng.hpp"

namespace sango {

/// Fully connected network, tanh between layers and a linear output.
/// Parameters live in one flat array: per layer, the row-major
/// (outputs x inputs) weight matrix followed by the bias vector.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized. `sizes` holds input, hidden..., output widths.
  explicit Mlp(std::vector<int> sizes);

  /// Gaussian weights with std gain / sqrt(fan_in); `output_gain` scales the last layer.
  static Mlp random(std::vector<int> sizes, Rng& rng, double hidden_gain, double output_gain);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  /// Per-layer activations, input first, output last.
  using Trace = std::vector<std::vector<double>>;

  std::vector<double> forward(std::span<const double> input) const;
  void forward(std::span<const double> input, Trace& trace) const;
  /// Adds d(loss)/d(params) to `grad` given d(loss)/d(output).
  void backward(const Trace& trace, std::span<const double> grad_output, std::span<double> grad) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + static_cast<std::size_t>(sizes_[layer]) * static_cast<std::size_t>(sizes_[layer + 1]);
  }

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct PolicyParams {
  Mlp actor;   // obs -> hidden -> hidden -> action logits
  Mlp critic;  // obs -> hidden -> hidden -> value

  std::size_t observation_size() const { return static_cast<std::size_t>(actor.input_size()); }
  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

/// Two tanh hidden layers of `hidden` units per network; all-zero weights.
PolicyParams zero_policy(int obs_len, int hidden, int num_actions = kNumActions);
PolicyParams random_policy(int obs_len, int hidden, std::uint64_t seed, int num_actions = kNumActions);

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

struct PolicyOutput {
  std::vector<double> probs;
  double value = 0.0;
};

/// Throws ShapeMismatch when the observation length differs from the network input.
PolicyOutput policy_forward(const PolicyParams& params, std::span<const double> obs);

/// Lowest index among the most probable actions.
int greedy_action(std::span<const double> probs);
/// Inverse-CDF draw from `probs`.
int sample_action(std::span<const double> probs, Rng& rng);

// ---------------------------------------------------------------------------
// PPO

struct TrainConfig {
  double learning_rate = 0.0006;
  double gamma = 0.97;
  double gae_lambda = 0.9;
  double clip_ratio = 0.2;
  int rollout_length = 2048;
  int minibatch_size = 64;
  int epochs_per_update = 10;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  /// Multiplies environment rewards before they reach the learner.
  double reward_scale = 0.001;
  double adam_epsilon = 1e-5;
  int hidden_size = 64;
  long total_steps = 200'000;
  long eval_interval = 50'000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t, A_t = delta_t + gamma lambda (1 - done_t) A_{t+1},
/// with V_T = `last_value`. Throws LengthMismatch.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double last_value, double gamma, double lambda);

struct RolloutBuffer {
  std::size_t obs_len = 0;
  std::vector<double> observations;  // row-major, obs_len per transition
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
  std::span<const double> observation(std::size_t i) const {
    return std::span<const double>(observations).subspan(i * obs_len, obs_len);
  }
  void add(std::span<const double> obs, int action, double log_prob, double reward, double value, bool done);
  void clear();
  /// Fills advantages and returns.
  void finish(double last_value, double gamma, double lambda);
};

struct LossBreakdown {
  double total = 0.0;
  double policy = 0.0;   // -mean clipped surrogate
  double value = 0.0;    // mean squared error
  double entropy = 0.0;  // mean entropy
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

struct PolicyGradient {
  std::vector<double> actor;
  std::vector<double> critic;
};

/// Minibatch loss  -surrogate + value_coef * mse - entropy_coef * entropy
/// averaged over `indices`, with `advantages` indexed like the buffer. When
/// `grad` is given it receives the exact gradient (sized to the parameters).
LossBreakdown ppo_loss(const PolicyParams& params, const RolloutBuffer& buffer, std::span<const std::size_t> indices,
                       std::span<const double> advantages, const TrainConfig& config, PolicyGradient* grad = nullptr);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
};

/// Rescales `grad` in place so its L2 norm is at most `max_norm` (no-op for max_norm <= 0).
void clip_grad_norm(std::span<double> grad, double max_norm);
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr,
               double epsilon, double beta1 = 0.9, double beta2 = 0.999);

struct OptimizerState {
  AdamState actor;
  AdamState critic;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

/// epochs_per_update passes of shuffled minibatches over a finished buffer
/// with per-buffer advantage normalization. Throws EmptyBatch, or
/// NonFiniteLoss naming the epoch and minibatch.
UpdateStats ppo_update(PolicyParams& params, const RolloutBuffer& buffer, const TrainConfig& config,
                       OptimizerState& optimizer, Rng& rng);

// ---------------------------------------------------------------------------
// Training and evaluation

struct CurveRow {
  long update = 0;
  long env_steps = 0;
  long episodes = 0;  // finished during this rollout
  double mean_reward = 0.0;  // NaN when no episode finished
  double mean_discomfort = 0.0;
  double mean_intrusion = 0.0;
  UpdateStats stats;
};

struct Checkpoint {
  long env_steps = 0;
  PolicyParams params;
};

struct TrainResult {
  PolicyParams params;
  std::vector<CurveRow> curve;
  std::vector<Checkpoint> checkpoints;  // initial, every eval_interval steps, final
};

/// Seeds of training episodes; disjoint from evaluation seeds.
std::uint64_t train_episode_seed(std::uint64_t seed, long episode);
std::uint64_t eval_episode_seed(std::uint64_t seed, long episode);

TrainResult train(const ScenarioConfig& scenario, const TrainConfig& config,
                  const std::function<void(const CurveRow&)>& on_update = {});

void write_curve_header(std::ostream& out);
void write_curve_row(std::ostream& out, const CurveRow& row);

enum class ActionSelection { Greedy, Sample, UniformRandom };

struct EvalOptions {
  int episodes = 100;
  std::uint64_t seed = 0;
  /// Explicit episode seeds; overrides `episodes`/`seed` when non-empty.
  std::vector<std::uint64_t> seeds;
  ActionSelection selection = ActionSelection::Greedy;
  int threads = 1;
  bool keep_logs = false;
};

struct EvalResult {
  std::vector<EpisodeMetrics> episodes;  // in episode order
  std::vector<EpisodeLog> logs;          // filled when keep_logs
  AggregateMetrics summary;
};

/// Runs episodes in parallel; results are ordered by episode index and do
/// not depend on the thread count. `policy` may be null for UniformRandom.
/// Throws CheckpointShapeMismatch when the policy input differs from the
/// scenario's observation size.
EvalResult evaluate(const ScenarioConfig& scenario, const PolicyParams* policy, const EvalOptions& options,
                    const MetricsConfig& metrics = {});

/// Plays one episode; returns its log.
EpisodeLog run_episode(NavigationEnv& env, std::uint64_t seed, const PolicyParams* policy, ActionSelection selection);

// ---------------------------------------------------------------------------
// SANGO-CHECKPOINT v1 text format

std::uint64_t fnv1a64(std::string_view text);

void write_checkpoint(std::ostream& out, const PolicyParams& params, std::uint64_t config_hash);
struct LoadedCheckpoint {
  PolicyParams params;
  std::uint64_t config_hash = 0;
};
/// Throws ParseError.
LoadedCheckpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const PolicyParams& params, std::uint64_t config_hash);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace sango
