#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "sango/geometry.hpp"
#include "sango/rng.hpp"
#include "sango/world.hpp"

namespace sango {

enum class MotionPolicy : int { NoisyAStar = 0, SocialForce = 1, Orca = 2 };

std::string_view to_string(MotionPolicy policy);

struct DynamicObstacle {
  int id = 0;
  Vec2 position;
  Vec2 velocity;
  double radius = 0.5;
  std::vector<Cell> course;
  std::size_t waypoint = 0;  // index of the next course cell to reach
  Vec2 goal;
  MotionPolicy policy = MotionPolicy::NoisyAStar;
  double preferred_speed = 0.7;
};

// Helbing-Molnar circular specification.
struct SocialForceParams {
  double relaxation_time = 0.5;
  double interaction_strength = 2.0;
  double interaction_range = 1.0;
  double obstacle_strength = 4.0;
  double obstacle_range = 0.5;
  int substeps = 10;
};

struct OrcaParams {
  double time_horizon = 5.0;
  double neighbor_distance = 5.0;
  int max_neighbors = 10;
  /// Clockwise rotation (radians) of the preferred velocity whenever
  /// neighbors are present.
  double pass_bias = 0.02;
};

struct MotionConfig {
  SocialForceParams sfm;
  OrcaParams orca;
  double astar_noise = 1.0;  // sigma, grid units
  double dt = 1.0;
  double max_speed = 1.0;
  double min_preferred_speed = 0.4;
  double max_preferred_speed = 0.9;
  /// Relative weights of {NoisyAStar, SocialForce, Orca} when a course is drawn.
  std::array<double, 3> policy_mix{1.0, 1.0, 1.0};
  double goal_tolerance = 0.5;
  double waypoint_tolerance = 0.5;
  double min_respawn_distance = 5.0;

  void validate() const;
};

/// A participant that pushes on the crowd but does not react to it (the robot).
struct Bystander {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.5;
};

/// King-move path from start to goal over Free cells. Entering a cell costs
/// 1 + |N(0, sigma)|, the noise being a pure function of (seed, cell), so
/// sigma = 0 yields a minimum-step path. Diagonal moves carry an extra 1e-6
/// so that ties between minimum-step paths go to the straighter one.
/// Throws NoPath.
std::vector<Cell> plan_noisy_astar(const GridWorld& world, Cell start, Cell goal, double sigma,
                                   std::uint64_t seed);

/// Velocity toward the current course target at preferred speed, shortened so
/// the target is not overshot within one dt.
Vec2 preferred_velocity(const DynamicObstacle& obstacle, const MotionConfig& config);

/// Exponential repulsion A * exp(-d / B) acting on `self`, directed away from
/// `other`. Coincident points use the fixed direction +x when `self_ranks_higher`
/// and -x otherwise.
Vec2 pairwise_repulsion(Vec2 self, Vec2 other, double strength, double range, bool self_ranks_higher = true);

/// Advances every obstacle with the social force model.
void sfm_step(std::vector<DynamicObstacle>& obstacles, const GridWorld& world, const MotionConfig& config,
              std::span<const Bystander> bystanders = {});

/// Advances every obstacle with ORCA (reciprocal among obstacles, full
/// responsibility against bystanders). Without a world, motion is unconstrained.
void orca_step(std::vector<DynamicObstacle>& obstacles, const MotionConfig& config,
               std::span<const Bystander> bystanders = {}, const GridWorld* world = nullptr);

bool at_goal(const DynamicObstacle& obstacle, const MotionConfig& config);

/// If the obstacle is within goal tolerance, draws a new goal uniformly from
/// reachable Free cells at least `min_respawn_distance` away, a new policy per
/// `policy_mix`, and plans a course. Returns false (no-op) otherwise.
/// Throws NoReachableGoal.
bool respawn_course(DynamicObstacle& obstacle, const GridWorld& world, const MotionConfig& config, Rng& rng);

/// Creates an obstacle at `spawn` heading to `goal` with a freshly drawn policy and course.
DynamicObstacle spawn_obstacle(int id, Cell spawn, Cell goal, const GridWorld& world, const MotionConfig& config,
                               Rng& rng);

/// One crowd step with mixed policies: each obstacle moves under its own
/// policy against a snapshot of the others, then finished courses respawn.
void advance_obstacles(std::vector<DynamicObstacle>& obstacles, const GridWorld& world, const MotionConfig& config,
                       std::span<const Bystander> bystanders, Rng& rng);

/// Trajectory dump: `step,obstacle_id,x,y,policy` rows.
void write_trajectory_header(std::ostream& out);
void write_trajectory_rows(std::ostream& out, long step, std::span<const DynamicObstacle> obstacles);

}  // namespace sango
