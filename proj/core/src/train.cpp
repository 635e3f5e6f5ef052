#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "sango/error.hpp"
#include "sango/learn.hpp"

namespace sango {

std::uint64_t train_episode_seed(std::uint64_t seed, long episode) {
  return derive_seed(derive_seed(seed, 1), static_cast<std::uint64_t>(episode));
}

std::uint64_t eval_episode_seed(std::uint64_t seed, long episode) {
  return derive_seed(derive_seed(seed, 2), static_cast<std::uint64_t>(episode));
}

TrainResult train(const ScenarioConfig& scenario, const TrainConfig& config,
                  const std::function<void(const CurveRow&)>& on_update) {
  config.validate();
  NavigationEnv env(scenario);
  const auto obs_len = static_cast<int>(scenario.observation_size());

  TrainResult result;
  result.params = random_policy(obs_len, config.hidden_size, derive_seed(config.seed, 4));
  result.checkpoints.push_back({0, result.params});
  if (config.total_steps == 0) return result;

  PolicyParams& params = result.params;
  OptimizerState optimizer;
  Rng action_rng(derive_seed(config.seed, 3));
  Rng shuffle_rng(derive_seed(config.seed, 5));
  const MetricsConfig metrics_config;

  long episode = 0;
  Observation obs = env.reset(train_episode_seed(config.seed, episode));
  long steps = 0;
  long next_checkpoint = config.eval_interval;
  RolloutBuffer buffer;
  buffer.obs_len = static_cast<std::size_t>(obs_len);

  while (steps < config.total_steps) {
    const long length = std::min<long>(config.rollout_length, config.total_steps - steps);
    buffer.clear();
    CurveRow row;
    double reward_sum = 0.0, discomfort_sum = 0.0, intrusion_sum = 0.0;

    for (long t = 0; t < length; ++t) {
      const std::vector<double> logits = params.actor.forward(obs);
      const std::vector<double> logp = log_softmax(logits);
      std::vector<double> probs(logp.size());
      std::transform(logp.begin(), logp.end(), probs.begin(), [](double v) { return std::exp(v); });
      const int action = sample_action(probs, action_rng);
      const double value = params.critic.forward(obs)[0];

      StepResult step = env.step(action);
      ++steps;
      buffer.add(obs, action, logp[static_cast<std::size_t>(action)], step.reward.total * config.reward_scale, value,
                 step.done);
      if (step.done) {
        const EpisodeMetrics m = score_episode(env.log(), scenario.reward, metrics_config);
        reward_sum += m.total_reward;
        discomfort_sum += m.discomfort_score;
        intrusion_sum += m.group_intrusion_rate.value_or(0.0);
        ++row.episodes;
        ++episode;
        obs = env.reset(train_episode_seed(config.seed, episode));
      } else {
        obs = std::move(step.observation);
      }
    }

    const double last_value = buffer.dones.back() ? 0.0 : params.critic.forward(obs)[0];
    buffer.finish(last_value, config.gamma, config.gae_lambda);
    row.stats = ppo_update(params, buffer, config, optimizer, shuffle_rng);
    row.update = static_cast<long>(result.curve.size());
    row.env_steps = steps;
    const double n = static_cast<double>(row.episodes);
    const double nan = std::nan("");
    row.mean_reward = row.episodes > 0 ? reward_sum / n : nan;
    row.mean_discomfort = row.episodes > 0 ? discomfort_sum / n : nan;
    row.mean_intrusion = row.episodes > 0 ? intrusion_sum / n : nan;
    result.curve.push_back(row);
    if (on_update) on_update(row);

    if (config.eval_interval > 0 && steps >= next_checkpoint) {
      result.checkpoints.push_back({steps, params});
      while (next_checkpoint <= steps) next_checkpoint += config.eval_interval;
    }
  }
  if (result.checkpoints.back().env_steps != steps) result.checkpoints.push_back({steps, params});
  return result;
}

void write_curve_header(std::ostream& out) {
  out << "# sango-training-curve v1\n"
         "update,env_steps,episodes,mean_reward,mean_discomfort,mean_intrusion,policy_loss,value_loss,entropy,"
         "approx_kl,clip_fraction\n";
}

void write_curve_row(std::ostream& out, const CurveRow& row) {
  std::ostringstream os;
  os.precision(17);
  os << row.update << ',' << row.env_steps << ',' << row.episodes << ',' << row.mean_reward << ','
     << row.mean_discomfort << ',' << row.mean_intrusion << ',' << row.stats.policy_loss << ','
     << row.stats.value_loss << ',' << row.stats.entropy << ',' << row.stats.approx_kl << ','
     << row.stats.clip_fraction << '\n';
  out << os.str();
}

// ---------------------------------------------------------------------------
// Evaluation

EpisodeLog run_episode(NavigationEnv& env, std::uint64_t seed, const PolicyParams* policy,
                       ActionSelection selection) {
  if (selection != ActionSelection::UniformRandom && policy == nullptr) {
    throw Error(ErrorCode::InvalidConfig, "policy-driven selection requires a policy");
  }
  Rng rng(derive_seed(seed, 7));
  Observation obs = env.reset(seed);
  while (true) {
    int action = 0;
    if (selection == ActionSelection::UniformRandom) {
      action = static_cast<int>(rng.uniform_index(kNumActions));
    } else {
      const PolicyOutput out = policy_forward(*policy, obs);
      action = selection == ActionSelection::Greedy ? greedy_action(out.probs) : sample_action(out.probs, rng);
    }
    StepResult step = env.step(action);
    if (step.done) break;
    obs = std::move(step.observation);
  }
  return env.log();
}

EvalResult evaluate(const ScenarioConfig& scenario, const PolicyParams* policy, const EvalOptions& options,
                    const MetricsConfig& metrics) {
  if (policy != nullptr && policy->observation_size() != scenario.observation_size()) {
    throw Error(ErrorCode::CheckpointShapeMismatch,
                "checkpoint expects observations of length " + std::to_string(policy->observation_size()) +
                    ", scenario produces " + std::to_string(scenario.observation_size()));
  }
  std::vector<std::uint64_t> seeds = options.seeds;
  if (seeds.empty()) {
    if (options.episodes < 1) throw Error(ErrorCode::InvalidConfig, "evaluation needs at least one episode");
    for (int i = 0; i < options.episodes; ++i) seeds.push_back(eval_episode_seed(options.seed, i));
  }
  const std::size_t n = seeds.size();
  EvalResult result;
  result.episodes.resize(n);
  if (options.keep_logs) result.logs.resize(n);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = n;
  auto worker = [&] {
    try {
      NavigationEnv env(scenario);
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          EpisodeLog log = run_episode(env, seeds[i], policy, options.selection);
          result.episodes[i] = score_episode(log, scenario.reward, metrics);
          if (options.keep_logs) result.logs[i] = std::move(log);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (i < error_index) {
            error_index = i;
            error = std::current_exception();
          }
        }
      }
    } catch (...) {
      const std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp<long>(options.threads, 1, static_cast<long>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  result.summary = aggregate(result.episodes);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr std::string_view kCheckpointMagic = "SANGO-CHECKPOINT v1";

void write_network(std::ostream& os, std::string_view name, const Mlp& net) {
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    os << "tensor " << name << '.' << l << ".weight " << net.sizes()[l + 1] << ' ' << net.sizes()[l] << '\n';
    const char* sep = "";
    for (double w : net.weights(l)) {
      os << sep << w;
      sep = " ";
    }
    os << '\n' << "tensor " << name << '.' << l << ".bias " << net.sizes()[l + 1] << '\n';
    sep = "";
    for (double b : net.bias(l)) {
      os << sep << b;
      sep = " ";
    }
    os << '\n';
  }
}

class CheckpointReader {
 public:
  explicit CheckpointReader(std::istream& in) : in_(in) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s)) fail("unexpected end of checkpoint");
    ++line_no_;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, "checkpoint line " + std::to_string(line_no_) + ": " + what);
  }

  std::vector<int> network(std::string_view name) {
    std::istringstream ss(line());
    std::string tag, got;
    ss >> tag >> got;
    if (tag != "network" || got != name) fail("expected 'network " + std::string(name) + "'");
    std::vector<int> sizes;
    int s = 0;
    while (ss >> s) sizes.push_back(s);
    if (!ss.eof() || sizes.size() < 2) fail("bad layer sizes");
    return sizes;
  }

  void values(const std::string& name, std::vector<int> shape, std::span<double> out) {
    std::istringstream ss(line());
    std::string tag, got;
    ss >> tag >> got;
    if (tag != "tensor" || got != name) fail("expected 'tensor " + name + "'");
    std::vector<int> dims;
    int d = 0;
    while (ss >> d) dims.push_back(d);
    if (dims != shape) fail("tensor " + name + " has unexpected shape");
    const std::string data = line();
    const char* p = data.data();
    const char* end = data.data() + data.size();
    for (double& v : out) {
      while (p < end && *p == ' ') ++p;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{}) fail("bad value in tensor " + name);
      p = next;
    }
    while (p < end && *p == ' ') ++p;
    if (p != end) fail("extra values in tensor " + name);
  }

  void read_network(std::string_view name, Mlp& net) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      const std::string prefix = std::string(name) + '.' + std::to_string(l);
      values(prefix + ".weight", {net.sizes()[l + 1], net.sizes()[l]}, net.weights(l));
      values(prefix + ".bias", {net.sizes()[l + 1]}, net.bias(l));
    }
  }

 private:
  std::istream& in_;
  long line_no_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const PolicyParams& params, std::uint64_t config_hash) {
  std::ostringstream os;
  os.precision(17);
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
  os << kCheckpointMagic << '\n' << "config_hash " << hash << '\n';
  for (const auto& [name, net] : {std::pair<std::string_view, const Mlp*>{"actor", &params.actor},
                                  std::pair<std::string_view, const Mlp*>{"critic", &params.critic}}) {
    os << "network " << name;
    for (int s : net->sizes()) os << ' ' << s;
    os << '\n';
  }
  write_network(os, "actor", params.actor);
  write_network(os, "critic", params.critic);
  os << "end\n";
  out << os.str();
}

LoadedCheckpoint read_checkpoint(std::istream& in) {
  CheckpointReader reader(in);
  if (reader.line() != kCheckpointMagic) reader.fail("missing '" + std::string(kCheckpointMagic) + "' header");
  LoadedCheckpoint loaded;
  {
    const std::string s = reader.line();
    constexpr std::string_view kKey = "config_hash ";
    if (!s.starts_with(kKey) || s.size() != kKey.size() + 16) reader.fail("expected config_hash");
    const auto [ptr, ec] = std::from_chars(s.data() + kKey.size(), s.data() + s.size(), loaded.config_hash, 16);
    if (ec != std::errc{} || ptr != s.data() + s.size()) reader.fail("bad config_hash");
  }
  loaded.params.actor = Mlp(reader.network("actor"));
  loaded.params.critic = Mlp(reader.network("critic"));
  if (loaded.params.actor.input_size() != loaded.params.critic.input_size() ||
      loaded.params.critic.output_size() != 1) {
    reader.fail("actor and critic shapes are inconsistent");
  }
  reader.read_network("actor", loaded.params.actor);
  reader.read_network("critic", loaded.params.critic);
  if (reader.line() != "end") reader.fail("expected 'end'");
  return loaded;
}

void save_checkpoint(const std::string& path, const PolicyParams& params, std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_checkpoint(out, params, config_hash);
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  return read_checkpoint(in);
}

}  // namespace sango
