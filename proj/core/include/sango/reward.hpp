#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>

#include "sango/geometry.hpp"
#include "sango/grouping.hpp"
#include "sango/motion.hpp"
#include "sango/world.hpp"

namespace sango {

struct RewardParams {
  double eta_boundary = 1.5;  // agent to perimeter
  double eta_dynamic = 3.0;   // agent to dynamic obstacle
  double eta_group = 2.0;     // agent to group boundary member
  double progress_scale = 4.688;
  long horizon = 2000;
  /// Continuous entities closer than this count as a collision.
  double collision_tolerance = 0.5;

  double dynamic_collision = -30.0;
  double static_collision = -20.0;
  double boundary_collision = -20.0;
  double core_intrusion = -50.0;
  double boundary_proximity = -15.0;
  double timeout = -2500.0;
  double goal = 3000.0;
  double live = -1.0;

  void validate() const;
};

enum class RewardTerm : std::size_t {
  DynamicCollision,
  StaticCollision,
  BoundaryCollision,
  CoreIntrusion,
  BoundaryProximity,
  DynamicProximity,
  GroupProximity,
  Progress,
  Timeout,
  Goal,
  Live,
};
inline constexpr std::size_t kNumRewardTerms = 11;

/// Stable snake_case name, used as the episode-log column suffix.
std::string_view term_name(RewardTerm term);

enum class Terminal { None, Goal, Timeout };

std::string_view to_string(Terminal terminal);

struct RewardBreakdown {
  std::array<double, kNumRewardTerms> terms{};
  double total = 0.0;
  Terminal terminal = Terminal::None;

  double operator[](RewardTerm t) const { return terms[static_cast<std::size_t>(t)]; }
};

/// Nearest distances per entity class; infinity when the class is empty.
struct Proximity {
  static constexpr double kNone = std::numeric_limits<double>::infinity();
  double dynamic = kNone;
  double group_boundary = kNone;
  double group_core = kNone;
  double wall = kNone;
};

Proximity measure_proximity(Vec2 agent, const GridWorld& world, std::span<const DynamicObstacle> obstacles,
                            std::span<const Cluster> clusters);

struct RewardContext {
  Vec2 prev_pos;
  Vec2 curr_pos;
  Vec2 goal;
  CellKind blocked_by = CellKind::Free;  // what stopped this step's move, if anything
  long step = 0;
};

/// Sums every active case of the social navigation reward. Collisions take
/// precedence over the proximity case of the same class; only the nearest
/// entity of each class contributes; goal and timeout are terminal and
/// suppress the live penalty.
RewardBreakdown compute_reward(const RewardContext& ctx, const Proximity& proximity, const RewardParams& params);

RewardBreakdown compute_reward(const RewardContext& ctx, const GridWorld& world,
                               std::span<const DynamicObstacle> obstacles, std::span<const Cluster> clusters,
                               const RewardParams& params);

}  // namespace sango
