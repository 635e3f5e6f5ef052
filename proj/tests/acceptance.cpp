// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Usage: acceptance [criterion ...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sango/config.hpp"
#include "sango/env.hpp"
#include "sango/learn.hpp"
#include "sango/metrics.hpp"
#include "sango/motion.hpp"

using namespace sango;
using namespace sango::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// Same partition and roles, allowing any bijective renaming of cluster ids.
bool same_up_to_relabeling(const std::vector<PointLabel>& a, const std::vector<PointLabel>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> forward, backward;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].role != b[i].role) return false;
    if ((a[i].cluster < 0) != (b[i].cluster < 0)) return false;
    if (a[i].cluster < 0) continue;
    const auto [f, f_new] = forward.emplace(a[i].cluster, b[i].cluster);
    const auto [g, g_new] = backward.emplace(b[i].cluster, a[i].cluster);
    if (f->second != b[i].cluster || g->second != a[i].cluster) return false;
  }
  return true;
}

Outcome dbscan_oracle() {
  Rng rng(1001);
  int matched = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 1000; ++trial) {
    const auto pts = random_points(rng, rng.uniform_index(51), trial % 2 == 1);
    const double eps = trial % 2 == 1 ? static_cast<double>(1 + rng.uniform_index(3)) : rng.uniform(0.3, 2.5);
    const int min_pts = 1 + static_cast<int>(rng.uniform_index(6));
    matched += same_up_to_relabeling(dbscan(pts, eps, min_pts), reference_dbscan(pts, eps, min_pts));
  }
  const double elapsed = seconds_since(t0);
  return {matched == 1000 && elapsed < 5.0, fmt("%d/1000 point sets match the oracle in %.2f s (limit 5 s)", matched, elapsed)};
}

Outcome reward_table() {
  using namespace reward_cases;
  const auto table = fixtures();
  int ok = 0;
  std::string first_bad;
  for (const Fixture& f : table) {
    const RewardBreakdown r = compute_reward(f.ctx, f.proximity, params_for(f));
    std::array<double, kNumRewardTerms> expected{};
    for (const auto& [term, value] : f.expected_terms) expected[static_cast<std::size_t>(term)] = value;
    bool good = std::abs(r.total - f.expected_total) <= 1e-9 && r.terminal == f.terminal;
    for (std::size_t t = 0; t < kNumRewardTerms; ++t) good = good && std::abs(r.terms[t] - expected[t]) <= 1e-9;
    ok += good;
    if (!good && first_bad.empty()) first_bad = f.name;
  }
  std::string detail = fmt("%d/%zu fixtures reproduce every term within 1e-9", ok, table.size());
  if (!first_bad.empty()) detail += ", first failure: " + first_bad;
  return {ok == 20 && table.size() == 20, detail};
}

Outcome pathfinding() {
  Rng rng(1003);
  int optimal = 0, valid = 0;
  for (int t = 0; t < 100; ++t) {
    const GridWorld w = random_world(50, 50, 0.3, rng);
    Cell a, b;
    int oracle = -1;
    while (oracle < 0) {
      a = random_free(w, rng);
      b = random_free(w, rng);
      oracle = bfs_steps(w, a, b);
    }
    const auto exact = plan_noisy_astar(w, a, b, 0.0, static_cast<std::uint64_t>(t));
    optimal += path_is_valid(w, exact, a, b) && static_cast<int>(exact.size()) - 1 == oracle;
    valid += path_is_valid(w, plan_noisy_astar(w, a, b, 1.5, static_cast<std::uint64_t>(t)), a, b);
  }
  return {optimal == 100 && valid == 100,
          fmt("sigma=0 matches BFS length on %d/100 worlds; sigma=1.5 paths valid on %d/100", optimal, valid)};
}

Outcome orca_swap() {
  const auto t0 = std::chrono::steady_clock::now();
  MotionConfig cfg;
  auto agent = [](int id, Vec2 from, Vec2 to) {
    DynamicObstacle o;
    o.id = id;
    o.position = from;
    o.goal = to;
    o.radius = 0.5;
    o.policy = MotionPolicy::Orca;
    o.preferred_speed = 0.8;
    return o;
  };
  std::vector<DynamicObstacle> obs{agent(0, {0, 0}, {10, 0}), agent(1, {10, 0}, {0, 0})};
  double min_sep = distance(obs[0].position, obs[1].position);
  for (int s = 0; s < 500; ++s) {
    orca_step(obs, cfg);
    min_sep = std::min(min_sep, distance(obs[0].position, obs[1].position));
  }
  const double miss = std::max(distance(obs[0].position, {10, 0}), distance(obs[1].position, {0, 0}));
  const double elapsed = seconds_since(t0);
  return {min_sep >= 1.0 && miss <= 0.5 && elapsed < 1.0,
          fmt("min separation %.4f (>= 1.0), worst goal miss %.4f (<= 0.5), %.4f s (< 1 s)", min_sep, miss, elapsed)};
}

Outcome ppo_gradient() {
  Rng rng(1005);
  TrainConfig cfg;
  double worst = 0.0;
  for (int batch = 0; batch < 20; ++batch) {
    PolicyParams params = random_policy(8, 4, rng.next_u64());
    const PolicyParams behaviour = random_policy(8, 4, rng.next_u64());
    for (double& w : params.actor.params()) w *= 3.0;
    const RolloutBuffer buf = random_buffer(behaviour, 16, rng);
    std::vector<std::size_t> idx(buf.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    PolicyGradient grad;
    ppo_loss(params, buf, idx, buf.advantages, cfg, &grad);
    const auto actor = central_differences(params, params.actor.params(), buf, idx, cfg, 1e-5);
    const auto critic = central_differences(params, params.critic.params(), buf, idx, cfg, 1e-5);
    worst = std::max({worst, max_relative_error(grad.actor, actor), max_relative_error(grad.critic, critic)});
  }
  return {worst < 1e-4, fmt("worst relative error %.3g over 20 batches (limit 1e-4)", worst)};
}

struct LearningRuns {
  EvalResult trained;
  EvalResult random;
  double train_seconds = 0.0;
};

EvalOptions hundred_episodes() {
  EvalOptions o;
  o.episodes = 100;
  o.seed = 1000;
  o.keep_logs = true;
  return o;
}

LearningRuns run_learning() {
  ExperimentManifest m;
  m.scenario = scenario_preset("cog_simple");
  m.train.total_steps = 200'000;
  m.train.seed = 42;
  LearningRuns runs;
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult trained = train(m.scenario, m.train);
  runs.train_seconds = seconds_since(t0);
  runs.trained = evaluate(m.scenario, &trained.params, hundred_episodes());
  EvalOptions random = hundred_episodes();
  random.selection = ActionSelection::UniformRandom;
  runs.random = evaluate(m.scenario, nullptr, random);
  return runs;
}

Outcome learning_signal(const LearningRuns& r) {
  const double greedy = r.trained.summary.success_rate;
  const double random = r.random.summary.success_rate;
  return {r.train_seconds <= 7200.0 && greedy >= 0.5 && random <= 0.1,
          fmt("trained in %.0f s (limit 7200); greedy success %.2f (>= 0.5), uniform random %.2f (<= 0.1)",
              r.train_seconds, greedy, random)};
}

struct AblationRuns {
  EvalResult with;
  EvalResult without;
};

AblationRuns run_ablation() {
  AblationRuns runs;
  for (const bool grouping : {true, false}) {
    ScenarioConfig s = scenario_preset("cog_medium");
    s.grouping_enabled = grouping;
    TrainConfig t;
    t.total_steps = 200'000;
    t.seed = 42;
    const TrainResult trained = train(s, t);
    (grouping ? runs.with : runs.without) = evaluate(s, &trained.params, hundred_episodes());
  }
  return runs;
}

Outcome ablation_direction(const AblationRuns& r) {
  std::vector<double> with, without;
  for (const auto& e : r.with.episodes) with.push_back(e.discomfort_score);
  for (const auto& e : r.without.episodes) without.push_back(e.discomfort_score);
  const SignTest test = paired_sign_test(with, without);
  const double d_with = r.with.summary.discomfort_score, d_without = r.without.summary.discomfort_score;
  const double c_with = r.with.summary.dynamic_collision_rate, c_without = r.without.summary.dynamic_collision_rate;
  const bool pass = d_with < d_without && c_with <= c_without && test.p_value < 0.05;
  return {pass, fmt("discomfort %.3f vs %.3f, dynamic collision rate %.4f vs %.4f (with vs without); "
                    "sign test %ld wins, %ld losses, %ld ties, one-sided p = %.4g (< 0.05)",
                    d_with, d_without, c_with, c_without, test.wins, test.losses, test.ties, test.p_value)};
}

Outcome termination_accounting(const std::vector<const EvalResult*>& evals) {
  int exact = 0;
  std::string sums;
  for (const EvalResult* e : evals) {
    const double total = e->summary.success_rate + e->summary.timeout_rate;
    exact += total == 1.0 && e->summary.episodes == 100;
    sums += fmt("%s%.2f + %.2f", sums.empty() ? "" : "; ", e->summary.success_rate, e->summary.timeout_rate);
  }
  return {exact == static_cast<int>(evals.size()) && !evals.empty(),
          fmt("%d/%zu 100-episode evaluations sum to exactly 1.0 (", exact, evals.size()) + sums + ")"};
}

struct Artifacts {
  std::string checkpoints;
  std::string logs;
  std::string table;
};

Artifacts determinism_run(int threads) {
  ScenarioConfig s = scenario_preset("cog_simple");
  TrainConfig t;
  t.total_steps = 8192;
  t.rollout_length = 1024;
  t.eval_interval = 4096;
  t.seed = 7;
  const TrainResult trained = train(s, t);
  Artifacts a;
  std::ostringstream ck, logs, table;
  for (const Checkpoint& c : trained.checkpoints) write_checkpoint(ck, c.params, 0);
  write_checkpoint(ck, trained.params, 0);
  EvalOptions o;
  o.episodes = 20;
  o.seed = 99;
  o.threads = threads;
  o.keep_logs = true;
  const EvalResult r = evaluate(s, &trained.params, o);
  for (const EpisodeLog& l : r.logs) write_episode_log(logs, l);
  const std::vector<TableColumn> cols{{"run", r.summary}};
  write_table_csv(table, cols, MetricsConfig{});
  write_episode_metrics_csv(table, r.episodes);
  return {ck.str(), logs.str(), table.str()};
}

Outcome determinism() {
  const Artifacts a = determinism_run(1);
  const Artifacts b = determinism_run(2);
  const bool ck = a.checkpoints == b.checkpoints, logs = a.logs == b.logs, table = a.table == b.table;
  return {ck && logs && table, fmt("checkpoints %s, episode logs %s, metric tables %s across two runs",
                                   ck ? "identical" : "DIFFER", logs ? "identical" : "DIFFER",
                                   table ? "identical" : "DIFFER")};
}

Outcome rescoring(const EvalResult& live, const RewardParams& reward) {
  int exact = 0;
  const std::size_t n = std::min<std::size_t>(50, live.logs.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::stringstream stored;
    write_episode_log(stored, live.logs[i]);
    exact += score_episode(read_episode_log(stored), reward) == live.episodes[i];
  }
  return {n == 50 && exact == 50, fmt("%d/%zu stored logs re-score to the live metrics exactly", exact, n)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto want = [&](int c) { return wanted.empty() || wanted.count(c) > 0; };

  const char* names[] = {"",
                         "DBSCAN oracle equivalence",
                         "reward table conformance",
                         "pathfinding optimality",
                         "ORCA head-on safety",
                         "PPO gradient correctness",
                         "desk-scale learning signal",
                         "grouping ablation direction",
                         "termination accounting",
                         "determinism",
                         "metrics re-scoring"};
  int failures = 0;
  auto report = [&](int c, const Outcome& o) {
    std::printf("criterion %2d %s  %-28s %s\n", c, o.pass ? "PASS" : "FAIL", names[c], o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  if (want(1)) report(1, dbscan_oracle());
  if (want(2)) report(2, reward_table());
  if (want(3)) report(3, pathfinding());
  if (want(4)) report(4, orca_swap());
  if (want(5)) report(5, ppo_gradient());

  std::optional<LearningRuns> learning;
  if (want(6) || want(8) || want(10)) learning = run_learning();
  if (want(6)) report(6, learning_signal(*learning));
  std::optional<AblationRuns> ablation;
  if (want(7)) {
    ablation = run_ablation();
    report(7, ablation_direction(*ablation));
  }
  if (want(8)) {
    std::vector<const EvalResult*> evals{&learning->trained, &learning->random};
    if (ablation) {
      evals.push_back(&ablation->with);
      evals.push_back(&ablation->without);
    }
    report(8, termination_accounting(evals));
  }
  if (want(9)) report(9, determinism());
  if (want(10)) report(10, rescoring(learning->trained, scenario_preset("cog_simple").reward));

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
