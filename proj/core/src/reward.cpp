#include "sango/reward.hpp"

#include <algorithm>
#include <cmath>

#include "sango/error.hpp"

namespace sango {

void RewardParams::validate() const {
  if (!(eta_boundary > 0 && eta_dynamic > 0 && eta_group > 0 && progress_scale > 0 && horizon > 0 &&
        collision_tolerance > 0)) {
    throw Error(ErrorCode::InvalidConfig, "reward thresholds, scale and horizon must be positive");
  }
}

std::string_view term_name(RewardTerm term) {
  switch (term) {
    case RewardTerm::DynamicCollision: return "dynamic_collision";
    case RewardTerm::StaticCollision: return "static_collision";
    case RewardTerm::BoundaryCollision: return "boundary_collision";
    case RewardTerm::CoreIntrusion: return "core_intrusion";
    case RewardTerm::BoundaryProximity: return "boundary_proximity";
    case RewardTerm::DynamicProximity: return "dynamic_proximity";
    case RewardTerm::GroupProximity: return "group_proximity";
    case RewardTerm::Progress: return "progress";
    case RewardTerm::Timeout: return "timeout";
    case RewardTerm::Goal: return "goal";
    case RewardTerm::Live: return "live";
  }
  return "unknown";
}

std::string_view to_string(Terminal terminal) {
  switch (terminal) {
    case Terminal::None: return "none";
    case Terminal::Goal: return "goal";
    case Terminal::Timeout: return "timeout";
  }
  return "unknown";
}

Proximity measure_proximity(Vec2 agent, const GridWorld& world, std::span<const DynamicObstacle> obstacles,
                            std::span<const Cluster> clusters) {
  Proximity p;
  p.wall = world.distance_to_boundary(agent);
  for (const DynamicObstacle& o : obstacles) p.dynamic = std::min(p.dynamic, distance(agent, o.position));
  for (const Cluster& c : clusters) {
    for (const ClusterMember& m : c.members) {
      const double d = distance(agent, m.position);
      if (m.role == PointRole::Core) {
        p.group_core = std::min(p.group_core, d);
      } else if (m.role == PointRole::Boundary) {
        p.group_boundary = std::min(p.group_boundary, d);
      }
    }
  }
  return p;
}

RewardBreakdown compute_reward(const RewardContext& ctx, const Proximity& proximity, const RewardParams& params) {
  RewardBreakdown r;
  auto set = [&r](RewardTerm t, double v) { r.terms[static_cast<std::size_t>(t)] = v; };
  const double tol = params.collision_tolerance;

  if (proximity.dynamic < tol) {
    set(RewardTerm::DynamicCollision, params.dynamic_collision);
  } else if (proximity.dynamic <= params.eta_dynamic) {
    set(RewardTerm::DynamicProximity, -20.0 / proximity.dynamic);
  }

  if (ctx.blocked_by == CellKind::StaticObstacle) set(RewardTerm::StaticCollision, params.static_collision);
  if (ctx.blocked_by == CellKind::Boundary) {
    set(RewardTerm::BoundaryCollision, params.boundary_collision);
  } else if (proximity.wall <= params.eta_boundary) {
    set(RewardTerm::BoundaryProximity, params.boundary_proximity);
  }

  if (proximity.group_core < tol) set(RewardTerm::CoreIntrusion, params.core_intrusion);
  if (proximity.group_boundary >= tol && proximity.group_boundary <= params.eta_group) {
    set(RewardTerm::GroupProximity, -std::exp(3.0 / proximity.group_boundary));
  }

  const double delta = distance(ctx.curr_pos, ctx.goal) - distance(ctx.prev_pos, ctx.goal);
  set(RewardTerm::Progress, delta == 0.0 ? 0.0 : -delta * params.progress_scale);

  if (ctx.curr_pos == ctx.goal) {
    set(RewardTerm::Goal, params.goal);
    r.terminal = Terminal::Goal;
  } else if (ctx.step >= params.horizon) {
    set(RewardTerm::Timeout, params.timeout);
    r.terminal = Terminal::Timeout;
  } else {
    set(RewardTerm::Live, params.live);
  }

  for (double t : r.terms) r.total += t;
  return r;
}

RewardBreakdown compute_reward(const RewardContext& ctx, const GridWorld& world,
                               std::span<const DynamicObstacle> obstacles, std::span<const Cluster> clusters,
                               const RewardParams& params) {
  return compute_reward(ctx, measure_proximity(ctx.curr_pos, world, obstacles, clusters), params);
}

}  // namespace sango
