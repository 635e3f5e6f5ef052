#pragma once

// Independent reference implementations and fixtures shared by the unit
// tests and the acceptance runner.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sango/grouping.hpp"
#include "sango/learn.hpp"
#include "sango/reward.hpp"
#include "sango/rng.hpp"
#include "sango/world.hpp"

namespace sango::testing {

// O(n^2) reference: neighborhood counts, then density-connectivity by
// transitive closure of the core adjacency matrix.
inline std::vector<PointLabel> reference_dbscan(const std::vector<ClusterPoint>& pts, double eps, int min_pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<bool>> near(n, std::vector<bool>(n));
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      near[i][j] = distance(pts[i].position, pts[j].position) <= eps;
      count += near[i][j];
    }
    core[i] = count >= min_pts;
  }
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) reach[i][j] = core[i] && core[j] && near[i][j];
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[k][j]) reach[i][j] = true;
      }
    }
  }
  // Cluster number: rank of the component's smallest core id.
  std::vector<int> component_min(n, std::numeric_limits<int>::max());
  std::set<int> mins;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (reach[i][j]) component_min[i] = std::min(component_min[i], pts[j].id);
    }
    mins.insert(component_min[i]);
  }
  std::map<int, int> rank;
  for (int m : mins) rank.emplace(m, static_cast<int>(rank.size()));

  std::vector<PointLabel> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) out[i] = {PointRole::Core, rank[component_min[i]]};
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    int cluster = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (!core[j] || !near[i][j]) continue;
      const double d = distance(pts[i].position, pts[j].position);
      if (d < best || (d == best && out[j].cluster < cluster)) {
        best = d;
        cluster = out[j].cluster;
      }
    }
    if (cluster >= 0) out[i] = {PointRole::Boundary, cluster};
  }
  return out;
}

// Integer lattice coordinates make equal distances (and border ties) common.
inline std::vector<ClusterPoint> random_points(Rng& rng, std::size_t n, bool lattice) {
  std::vector<ClusterPoint> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i].id = static_cast<int>(i) * 3 + 1;
    if (lattice) {
      pts[i].position = {static_cast<double>(rng.uniform_index(12)), static_cast<double>(rng.uniform_index(12))};
    } else {
      pts[i].position = {rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
    }
  }
  return pts;
}

// Random world: perimeter plus interior cells blocked with probability `density`.
inline GridWorld random_world(int w, int h, double density, Rng& rng) {
  std::vector<CellKind> cells(static_cast<std::size_t>(w * h), CellKind::Free);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      auto& k = cells[static_cast<std::size_t>(r * w + c)];
      if (r == 0 || c == 0 || r == h - 1 || c == w - 1) {
        k = CellKind::Boundary;
      } else if (rng.uniform() < density) {
        k = CellKind::StaticObstacle;
      }
    }
  }
  return GridWorld(w, h, std::move(cells));
}

// King-move BFS distance in steps, -1 if unreachable.
inline int bfs_steps(const GridWorld& w, Cell from, Cell to) {
  std::vector<int> dist(w.cells().size(), -1);
  std::queue<Cell> q;
  dist[w.index(from)] = 0;
  q.push(from);
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop();
    if (c == to) return dist[w.index(c)];
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const Cell n{c.col + dc, c.row + dr};
        if (!w.is_free(n) || dist[w.index(n)] >= 0) continue;
        dist[w.index(n)] = dist[w.index(c)] + 1;
        q.push(n);
      }
    }
  }
  return -1;
}

inline Cell random_free(const GridWorld& w, Rng& rng) {
  for (;;) {
    const Cell c{static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(w.width()))),
                 static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(w.height())))};
    if (w.is_free(c)) return c;
  }
}

// True when `path` runs start to goal through free cells in king moves.
inline bool path_is_valid(const GridWorld& w, const std::vector<Cell>& path, Cell start, Cell goal) {
  if (path.empty() || path.front() != start || path.back() != goal) return false;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!w.is_free(path[i])) return false;
    if (i > 0 && chebyshev(path[i - 1], path[i]) != 1) return false;
  }
  return true;
}

// Transitions drawn from `behaviour`, with returns and advantages random.
inline RolloutBuffer random_buffer(const PolicyParams& behaviour, std::size_t n, Rng& rng) {
  RolloutBuffer buf;
  buf.obs_len = behaviour.observation_size();
  std::vector<double> obs(buf.obs_len);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : obs) v = rng.uniform(-1.0, 1.0);
    const std::vector<double> logp = log_softmax(behaviour.actor.forward(obs));
    const auto action = static_cast<int>(rng.uniform_index(kNumActions));
    buf.add(obs, action, logp[static_cast<std::size_t>(action)], 0.0, 0.0, false);
  }
  for (std::size_t i = 0; i < n; ++i) {
    buf.advantages.push_back(rng.normal());
    buf.returns.push_back(rng.normal());
  }
  return buf;
}

// Central differences at h = 1e-5 carry ~1e-11 absolute rounding noise, so
// the denominator is floored at 1e-6.
inline double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

inline std::vector<double> central_differences(PolicyParams& params, std::span<double> flat, const RolloutBuffer& buf,
                                        std::span<const std::size_t> idx, const TrainConfig& cfg, double h) {
  std::vector<double> out(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + h;
    const double up = ppo_loss(params, buf, idx, buf.advantages, cfg).total;
    flat[i] = saved - h;
    const double down = ppo_loss(params, buf, idx, buf.advantages, cfg).total;
    flat[i] = saved;
    out[i] = (up - down) / (2 * h);
  }
  return out;
}

namespace reward_cases {

inline constexpr double kInf = Proximity::kNone;
inline constexpr double kZeta = 4.688;

struct Fixture {
  std::string name;
  RewardContext ctx;
  Proximity proximity;
  double expected_total;
  std::vector<std::pair<RewardTerm, double>> expected_terms;  // every other term must be 0
  Terminal terminal = Terminal::None;
  double eta_group = 2.0;
};

// Agent at (10,10), goal 10 cells east, staying put, far from everything.
inline RewardContext idle() { return {{10, 10}, {10, 10}, {20, 10}, CellKind::Free, 5}; }
inline Proximity clear() { return {kInf, kInf, kInf, 10.0}; }

inline Proximity with(double dynamic, double boundary, double core, double wall) { return {dynamic, boundary, core, wall}; }

inline std::vector<Fixture> fixtures() {
  using T = RewardTerm;
  const double e = std::numbers::e;
  std::vector<Fixture> f;
  f.push_back({"idle", idle(), clear(), -1.0, {{T::Live, -1.0}}});
  {
    RewardContext c = idle();
    c.curr_pos = {11, 10};
    f.push_back({"unit_approach", c, clear(), -1.0 + kZeta, {{T::Live, -1.0}, {T::Progress, kZeta}}});
  }
  {
    RewardContext c = idle();
    c.curr_pos = {9, 10};
    f.push_back({"unit_retreat", c, clear(), -1.0 - kZeta, {{T::Live, -1.0}, {T::Progress, -kZeta}}});
  }
  f.push_back({"dynamic_collision", idle(), with(0.3, kInf, kInf, 10), -31.0,
               {{T::DynamicCollision, -30.0}, {T::Live, -1.0}}});
  f.push_back({"dynamic_at_2", idle(), with(2.0, kInf, kInf, 10), -11.0,
               {{T::DynamicProximity, -10.0}, {T::Live, -1.0}}});
  f.push_back({"dynamic_at_eta", idle(), with(3.0, kInf, kInf, 10), -20.0 / 3.0 - 1.0,
               {{T::DynamicProximity, -20.0 / 3.0}, {T::Live, -1.0}}});
  f.push_back({"dynamic_beyond_eta", idle(), with(3.5, kInf, kInf, 10), -1.0, {{T::Live, -1.0}}});
  f.push_back({"dynamic_at_tolerance", idle(), with(0.5, kInf, kInf, 10), -41.0,
               {{T::DynamicProximity, -40.0}, {T::Live, -1.0}}});
  {
    RewardContext c = idle();
    c.blocked_by = CellKind::StaticObstacle;
    f.push_back({"static_collision", c, clear(), -21.0, {{T::StaticCollision, -20.0}, {T::Live, -1.0}}});
  }
  {
    RewardContext c{{1, 5}, {1, 5}, {10, 5}, CellKind::Boundary, 5};
    f.push_back({"boundary_collision_suppresses_proximity", c, with(kInf, kInf, kInf, 1.0), -21.0,
                 {{T::BoundaryCollision, -20.0}, {T::Live, -1.0}}});
  }
  f.push_back({"wall_proximity", idle(), with(kInf, kInf, kInf, 1.0), -16.0,
               {{T::BoundaryProximity, -15.0}, {T::Live, -1.0}}});
  f.push_back({"wall_at_eta", idle(), with(kInf, kInf, kInf, 1.5), -16.0,
               {{T::BoundaryProximity, -15.0}, {T::Live, -1.0}}});
  f.push_back({"core_intrusion_with_collision", idle(), with(0.2, kInf, 0.2, 10), -81.0,
               {{T::DynamicCollision, -30.0}, {T::CoreIntrusion, -50.0}, {T::Live, -1.0}}});
  {
    Fixture g{"group_boundary_at_3", idle(), with(3.0, 3.0, kInf, 10), -e - 20.0 / 3.0 - 1.0,
              {{T::GroupProximity, -e}, {T::DynamicProximity, -20.0 / 3.0}, {T::Live, -1.0}}};
    g.eta_group = 3.0;
    f.push_back(g);
  }
  f.push_back({"group_boundary_at_1", idle(), with(1.0, 1.0, kInf, 10), -std::exp(3.0) - 21.0,
               {{T::GroupProximity, -std::exp(3.0)}, {T::DynamicProximity, -20.0}, {T::Live, -1.0}}});
  f.push_back({"group_boundary_inside_tolerance", idle(), with(0.4, 0.4, kInf, 10), -31.0,
               {{T::DynamicCollision, -30.0}, {T::Live, -1.0}}});
  {
    RewardContext c{{19, 10}, {20, 10}, {20, 10}, CellKind::Free, 7};
    f.push_back({"goal", c, clear(), 3000.0 + kZeta, {{T::Goal, 3000.0}, {T::Progress, kZeta}}, Terminal::Goal});
  }
  {
    RewardContext c = idle();
    c.step = 100;
    f.push_back({"timeout", c, clear(), -2500.0, {{T::Timeout, -2500.0}}, Terminal::Timeout});
  }
  {
    RewardContext c{{19, 10}, {20, 10}, {20, 10}, CellKind::Free, 100};
    f.push_back({"goal_on_last_step", c, clear(), 3000.0 + kZeta, {{T::Goal, 3000.0}, {T::Progress, kZeta}},
                 Terminal::Goal});
  }
  {
    // Blocked diagonal next to the wall while a group presses in.
    RewardContext c{{2, 2}, {2, 2}, {12, 2}, CellKind::StaticObstacle, 9};
    f.push_back({"everything", c, with(0.1, 1.5, 0.1, 1.0), -30.0 - 20.0 - 15.0 - 50.0 - std::exp(2.0) - 1.0,
                 {{T::DynamicCollision, -30.0},
                  {T::StaticCollision, -20.0},
                  {T::BoundaryProximity, -15.0},
                  {T::CoreIntrusion, -50.0},
                  {T::GroupProximity, -std::exp(2.0)},
                  {T::Live, -1.0}}});
  }
  return f;
}

inline RewardParams params_for(const Fixture& f) {
  RewardParams p;
  p.horizon = 100;
  p.eta_group = f.eta_group;
  return p;
}

}  // namespace reward_cases

}  // namespace sango::testing
