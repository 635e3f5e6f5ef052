#include <benchmark/benchmark.h>

#include <numeric>
#include <sstream>

#include "sango/env.hpp"
#include "sango/grouping.hpp"
#include "sango/learn.hpp"
#include "sango/metrics.hpp"
#include "sango/motion.hpp"
#include "sango/rng.hpp"

using namespace sango;

namespace {

std::vector<ClusterPoint> random_points(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ClusterPoint> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {static_cast<int>(i), {rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)}};
  return pts;
}

void BM_Dbscan(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(dbscan(pts, 1.5, 3));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dbscan)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_NoisyAStar(benchmark::State& state) {
  const GridWorld world = GridWorld::open(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  const Cell goal{static_cast<int>(state.range(0)) - 2, static_cast<int>(state.range(0)) - 2};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(plan_noisy_astar(world, {1, 1}, goal, 1.0, seed++));
}
BENCHMARK(BM_NoisyAStar)->Arg(20)->Arg(50)->Arg(100);

void BM_OrcaStep(benchmark::State& state) {
  MotionConfig cfg;
  Rng rng(3);
  std::vector<DynamicObstacle> crowd(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < crowd.size(); ++i) {
    crowd[i].id = static_cast<int>(i);
    crowd[i].position = {rng.uniform(0.0, 20.0), rng.uniform(0.0, 20.0)};
    crowd[i].goal = {rng.uniform(0.0, 20.0), rng.uniform(0.0, 20.0)};
    crowd[i].policy = MotionPolicy::Orca;
  }
  for (auto _ : state) {
    auto copy = crowd;
    orca_step(copy, cfg);
    benchmark::DoNotOptimize(copy.data());
  }
}
BENCHMARK(BM_OrcaStep)->Arg(10)->Arg(30);

void BM_EnvStep(benchmark::State& state) {
  NavigationEnv env(scenario_preset(state.range(0) == 0 ? "cog_simple" : "cog_complex"));
  Rng rng(5);
  std::uint64_t episode = 0;
  env.reset(episode++);
  for (auto _ : state) {
    if (env.done()) env.reset(episode++);
    benchmark::DoNotOptimize(env.step(static_cast<int>(rng.uniform_index(kNumActions))));
  }
}
BENCHMARK(BM_EnvStep)->Arg(0)->Arg(1);

void BM_PolicyForward(benchmark::State& state) {
  const PolicyParams params = random_policy(44, 64, 7);
  std::vector<double> obs(44, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(policy_forward(params, obs));
}
BENCHMARK(BM_PolicyForward);

void BM_PpoUpdate(benchmark::State& state) {
  TrainConfig cfg;
  cfg.rollout_length = static_cast<int>(state.range(0));
  cfg.epochs_per_update = 1;
  const PolicyParams base = random_policy(44, cfg.hidden_size, 8);
  Rng rng(9);
  RolloutBuffer buf;
  buf.obs_len = 44;
  std::vector<double> obs(44);
  for (int i = 0; i < cfg.rollout_length; ++i) {
    for (double& v : obs) v = rng.uniform(-1.0, 1.0);
    buf.add(obs, static_cast<int>(rng.uniform_index(kNumActions)), -2.2, rng.normal(), 0.0, i % 50 == 49);
  }
  buf.finish(0.0, cfg.gamma, cfg.gae_lambda);
  for (auto _ : state) {
    PolicyParams params = base;
    OptimizerState opt;
    Rng shuffle(10);
    benchmark::DoNotOptimize(ppo_update(params, buf, cfg, opt, shuffle));
  }
  state.SetItemsProcessed(state.iterations() * cfg.rollout_length);
}
BENCHMARK(BM_PpoUpdate)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_ScoreEpisode(benchmark::State& state) {
  const ScenarioConfig scenario = scenario_preset("cog_simple");
  NavigationEnv env(scenario);
  const EpisodeLog log = run_episode(env, 11, nullptr, ActionSelection::UniformRandom);
  for (auto _ : state) benchmark::DoNotOptimize(score_episode(log, scenario.reward));
}
BENCHMARK(BM_ScoreEpisode);

}  // namespace

BENCHMARK_MAIN();
