#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sango/grouping.hpp"
#include "sango/motion.hpp"
#include "sango/reward.hpp"
#include "sango/rng.hpp"
#include "sango/world.hpp"

namespace sango {

enum class EnvironmentKind { Cog, Mosang };

std::string_view to_string(EnvironmentKind kind);

struct ObservationConfig {
  int static_slots = 10;
  int dynamic_slots = 10;
  /// Static offsets are divided by this many cells and clipped to [-1, 1];
  /// 0 divides by the grid dimensions instead.
  double static_scale = 0.0;
};

struct ScenarioConfig {
  std::string name = "custom";
  EnvironmentKind kind = EnvironmentKind::Cog;

  // COG generator
  int grid_size = 20;
  int num_static = 10;
  int num_dynamic = 10;

  // MOSANG blueprint; an empty path selects the built-in synthetic world.
  std::string blueprint_path;
  int synthetic_world = 1;
  BlueprintParams blueprint;
  double world_scale = 1.0;

  double meters_per_cell = 1.0;
  /// Minimum Euclidean start-goal separation for the agent, grid units.
  double min_agent_separation = 0.0;
  double agent_radius = 0.5;
  double obstacle_radius = 0.5;

  DbscanParams dbscan;
  RewardParams reward;
  MotionConfig motion;
  ObservationConfig observation;
  bool grouping_enabled = true;

  std::size_t observation_size() const {
    return 4 + 2 * static_cast<std::size_t>(observation.static_slots) +
           2 * static_cast<std::size_t>(observation.dynamic_slots);
  }
  void validate() const;
};

/// cog_simple, cog_medium, cog_complex, mosang_simple, mosang_medium,
/// mosang_complex. Throws InvalidConfig for other names.
ScenarioConfig scenario_preset(std::string_view name);
std::span<const std::string_view> preset_names();

/// Built-in floor plans (1..3) used by MOSANG scenarios without a blueprint file.
GrayImage synthetic_blueprint(int world_index);

/// Flat bounded vector: agent position in [0,1]^2, goal offset, K_s nearest
/// static offsets, K_d nearest sensed dynamic obstacles as (distance /
/// sensing_range, bearing in (-pi, pi]). Empty slots hold the sentinels
/// (0, 0) and (1, 0).
using Observation = std::vector<double>;

Observation encode_observation(const AgentState& agent, const GridWorld& world,
                               std::span<const DynamicObstacle> obstacles, const ScenarioConfig& config);

/// One row of the episode log.
struct StepRecord {
  long step = 0;
  Cell agent;
  int action = 0;
  CellKind blocked_by = CellKind::Free;
  RewardBreakdown reward;
  Proximity proximity;  // group distances measured whether or not grouping is rewarded
  bool group_intrusion = false;
  int cluster_count = 0;
  bool done = false;
};

struct EpisodeLog {
  Cell start;
  Cell goal;
  bool grouping_enabled = true;
  std::vector<StepRecord> steps;

  bool complete() const { return !steps.empty() && steps.back().done; }
};

void write_episode_log(std::ostream& out, const EpisodeLog& log);
/// Throws ParseError naming the offending line.
EpisodeLog read_episode_log(std::istream& in);

struct StepInfo {
  long step = 0;
  bool blocked = false;
  bool dynamic_collision = false;
  bool static_collision = false;
  bool boundary_collision = false;
  GroupSnapshot clusters;
};

struct StepResult {
  Observation observation;
  RewardBreakdown reward;
  bool done = false;
  StepInfo info;
};

/// Episode state machine. Each step: the agent moves, the crowd advances,
/// obstacles are regrouped, the reward is scored, and the observation is
/// encoded from the post-move state.
class NavigationEnv {
 public:
  explicit NavigationEnv(ScenarioConfig config);

  /// Throws DegenerateWorld or NoAgentPath.
  Observation reset(std::uint64_t seed);
  /// Throws EpisodeFinished once done.
  StepResult step(int action);

  const ScenarioConfig& config() const { return config_; }
  const GridWorld& world() const { return *world_; }
  const AgentState& agent() const { return agent_; }
  const std::vector<DynamicObstacle>& obstacles() const { return obstacles_; }
  const GroupMemory& memory() const { return memory_; }
  const EpisodeLog& log() const { return log_; }
  long step_index() const { return step_; }
  bool done() const { return done_; }

  /// Optional per-step trajectory and cluster dumps; streams must outlive the episode.
  void set_trace(std::ostream* trajectories, std::ostream* clusters);

 private:
  void place_mosang(Rng& rng);

  ScenarioConfig config_;
  std::optional<GridWorld> blueprint_world_;
  std::optional<GridWorld> world_;
  AgentState agent_;
  std::vector<DynamicObstacle> obstacles_;
  GroupMemory memory_;
  Rng motion_rng_;
  EpisodeLog log_;
  long step_ = 0;
  bool done_ = true;
  std::ostream* trajectory_out_ = nullptr;
  std::ostream* cluster_out_ = nullptr;
};

}  // namespace sango
