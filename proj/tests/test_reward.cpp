#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "sango/reward.hpp"
#include "sango/rng.hpp"
#include "oracles.hpp"

using namespace sango;
using namespace sango::testing::reward_cases;

TEST(Reward, FixtureTable) {
  const auto table = fixtures();
  ASSERT_EQ(table.size(), 20u);
  for (const Fixture& f : table) {
    SCOPED_TRACE(f.name);
    const RewardBreakdown r = compute_reward(f.ctx, f.proximity, params_for(f));
    EXPECT_NEAR(r.total, f.expected_total, 1e-9);
    EXPECT_EQ(r.terminal, f.terminal);
    std::array<double, kNumRewardTerms> expected{};
    for (const auto& [term, value] : f.expected_terms) expected[static_cast<std::size_t>(term)] = value;
    for (std::size_t t = 0; t < kNumRewardTerms; ++t) {
      EXPECT_NEAR(r.terms[t], expected[t], 1e-9) << term_name(static_cast<RewardTerm>(t));
    }
  }
}

TEST(Reward, NamedConstants) {
  RewardParams p;
  p.eta_group = 3.0;
  const RewardBreakdown g = compute_reward(idle(), with(kInf, 3.0, kInf, 10), p);
  EXPECT_NEAR(g[RewardTerm::GroupProximity], -std::numbers::e, 1e-9);
  EXPECT_NEAR(compute_reward(idle(), with(2.0, kInf, kInf, 10), p)[RewardTerm::DynamicProximity], -10.0, 1e-9);
}

TEST(Reward, FromWorldState) {
  const GridWorld w = GridWorld::open(20, 20);
  std::vector<DynamicObstacle> obs(1);
  obs[0].id = 3;
  obs[0].position = {12.0, 10.0};
  const RewardContext c = idle();
  const RewardBreakdown r = compute_reward(c, w, obs, {}, RewardParams{});
  EXPECT_NEAR(r.total, -10.0 - 1.0, 1e-12);

  Cluster cl;
  cl.members = {{3, {12.0, 10.0}, PointRole::Core}, {4, {11.5, 10.0}, PointRole::Boundary}};
  const Proximity p = measure_proximity(c.curr_pos, w, obs, std::vector<Cluster>{cl});
  EXPECT_EQ(p.group_core, 2.0);
  EXPECT_EQ(p.group_boundary, 1.5);
  EXPECT_EQ(p.wall, 9.0);
}

TEST(Reward, DecompositionOverRandomStates) {
  Rng rng(100);
  const GridWorld w = GridWorld::open(30, 30);
  RewardParams params;
  params.horizon = 50;
  for (int i = 0; i < 10000; ++i) {
    std::vector<DynamicObstacle> obs(rng.uniform_index(6));
    for (auto& o : obs) o.position = {rng.uniform(1, 28), rng.uniform(1, 28)};
    const GroupSnapshot s = sense_and_group({15, 15}, obs, DbscanParams{});
    const RewardContext ctx{{rng.uniform(1, 28), rng.uniform(1, 28)},
                            {static_cast<double>(1 + rng.uniform_index(28)), static_cast<double>(1 + rng.uniform_index(28))},
                            {static_cast<double>(1 + rng.uniform_index(28)), static_cast<double>(1 + rng.uniform_index(28))},
                            static_cast<CellKind>(rng.uniform_index(3)),
                            static_cast<long>(rng.uniform_index(60))};
    const RewardBreakdown r = compute_reward(ctx, w, obs, s.clusters, params);
    double sum = 0.0;
    for (double t : r.terms) sum += t;
    ASSERT_EQ(sum, r.total);
    if (r.terminal == Terminal::Goal) ASSERT_EQ(r[RewardTerm::Goal], 3000.0);
    if (r.terminal == Terminal::Timeout) ASSERT_EQ(r[RewardTerm::Timeout], -2500.0);
  }
}

TEST(Reward, MonotoneInDynamicDistance) {
  RewardParams p;
  double prev = -kInf;
  for (double d = p.eta_dynamic; d > p.collision_tolerance; d -= 0.01) {
    const double total = compute_reward(idle(), with(d, kInf, kInf, 10), p).total;
    if (prev != -kInf) EXPECT_LE(total, prev) << d;
    prev = total;
  }
}

TEST(Reward, ContinuousAwayFromThresholds) {
  RewardParams p;
  for (double d = 0.6; d < 2.9; d += 0.05) {
    const double a = compute_reward(idle(), with(d, kInf, kInf, 10), p).total;
    const double b = compute_reward(idle(), with(d + 1e-7, kInf, kInf, 10), p).total;
    EXPECT_NEAR(a, b, 1e-4);
  }
}

TEST(Reward, ReflectionSymmetry) {
  Rng rng(101);
  const GridWorld w = GridWorld::open(25, 25);
  auto mirror = [&](Vec2 v) { return Vec2{24.0 - v.x, v.y}; };
  for (int i = 0; i < 2000; ++i) {
    std::vector<DynamicObstacle> obs(rng.uniform_index(8));
    for (std::size_t k = 0; k < obs.size(); ++k) {
      obs[k].id = static_cast<int>(k);
      obs[k].position = {rng.uniform(1, 23), rng.uniform(1, 23)};
    }
    const Vec2 agent{static_cast<double>(1 + rng.uniform_index(23)), static_cast<double>(1 + rng.uniform_index(23))};
    const RewardContext ctx{agent + Vec2{1, 0}, agent, {static_cast<double>(1 + rng.uniform_index(23)), 7.0},
                            CellKind::Free, 3};
    auto mirrored_obs = obs;
    for (auto& o : mirrored_obs) o.position = mirror(o.position);
    const RewardContext mctx{mirror(ctx.prev_pos), mirror(ctx.curr_pos), mirror(ctx.goal), CellKind::Free, 3};
    const auto s = sense_and_group(agent, obs, DbscanParams{});
    const auto ms = sense_and_group(mirror(agent), mirrored_obs, DbscanParams{});
    EXPECT_NEAR(compute_reward(ctx, w, obs, s.clusters, RewardParams{}).total,
                compute_reward(mctx, w, mirrored_obs, ms.clusters, RewardParams{}).total, 1e-9);
  }
}

TEST(Reward, ZeroProgressWhenStill) {
  RewardContext c = idle();
  c.goal = {10.3, 17.9};
  const RewardBreakdown r = compute_reward(c, clear(), RewardParams{});
  EXPECT_EQ(r[RewardTerm::Progress], 0.0);
  EXPECT_FALSE(std::signbit(r[RewardTerm::Progress]));
}
