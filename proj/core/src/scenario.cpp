#include <array>
#include <string>

#include "sango/env.hpp"
#include "sango/error.hpp"

namespace sango {

namespace {

constexpr std::array<std::string_view, 6> kPresetNames{
    "cog_simple", "cog_medium", "cog_complex", "mosang_simple", "mosang_medium", "mosang_complex",
};

ScenarioConfig cog(std::string_view name, int grid, int num_static, int num_dynamic) {
  ScenarioConfig c;
  c.name = std::string(name);
  c.kind = EnvironmentKind::Cog;
  c.grid_size = grid;
  c.num_static = num_static;
  c.num_dynamic = num_dynamic;
  c.meters_per_cell = 1.0;
  c.reward.horizon = 5L * grid;
  c.min_agent_separation = 0.4 * grid;
  return c;
}

// Blueprint cells are 0.1 m, so every length parameter is ten times its COG value.
ScenarioConfig mosang(std::string_view name, int world, int num_dynamic) {
  ScenarioConfig c;
  c.name = std::string(name);
  c.kind = EnvironmentKind::Mosang;
  c.synthetic_world = world;
  c.num_static = 0;
  c.num_dynamic = num_dynamic;
  c.meters_per_cell = 0.1;
  c.min_agent_separation = 40.0;
  c.agent_radius = 5.0;
  c.obstacle_radius = 5.0;

  c.dbscan.eps = 15.0;
  c.dbscan.sensing_range = 70.0;

  c.reward.eta_boundary = 15.0;
  c.reward.eta_dynamic = 30.0;
  c.reward.eta_group = 20.0;
  c.reward.collision_tolerance = 5.0;
  c.reward.horizon = 5000;

  c.motion.sfm.interaction_range = 10.0;
  c.motion.sfm.obstacle_range = 5.0;
  c.motion.orca.neighbor_distance = 50.0;
  c.motion.orca.time_horizon = 50.0;
  c.motion.min_respawn_distance = 50.0;
  return c;
}

void fill_rect(GrayImage& image, int col0, int row0, int col1, int row1, std::uint8_t value) {
  for (int r = row0; r < row1; ++r) {
    for (int c = col0; c < col1; ++c) {
      image.pixels[static_cast<std::size_t>(r) * static_cast<std::size_t>(image.width) +
                   static_cast<std::size_t>(c)] = value;
    }
  }
}

}  // namespace

std::span<const std::string_view> preset_names() { return kPresetNames; }

ScenarioConfig scenario_preset(std::string_view name) {
  if (name == "cog_simple") return cog(name, 20, 10, 10);
  if (name == "cog_medium") return cog(name, 20, 40, 30);
  if (name == "cog_complex") return cog(name, 25, 40, 50);
  if (name == "mosang_simple") return mosang(name, 3, 3);
  if (name == "mosang_medium") return mosang(name, 2, 30);
  if (name == "mosang_complex") return mosang(name, 1, 30);
  throw Error(ErrorCode::InvalidConfig, "unknown scenario preset '" + std::string(name) + "'");
}

GrayImage synthetic_blueprint(int world_index) {
  constexpr int kWidth = 160;
  constexpr int kHeight = 120;
  GrayImage image{kWidth, kHeight, std::vector<std::uint8_t>(kWidth * kHeight, 255)};
  constexpr std::uint8_t kWall = 0;
  fill_rect(image, 0, 0, kWidth, 2, kWall);
  fill_rect(image, 0, kHeight - 2, kWidth, kHeight, kWall);
  fill_rect(image, 0, 0, 2, kHeight, kWall);
  fill_rect(image, kWidth - 2, 0, kWidth, kHeight, kWall);
  switch (world_index) {
    case 1:  // open hall with pillars
      for (int c : {40, 110}) {
        for (int r : {30, 80}) fill_rect(image, c, r, c + 10, r + 10, kWall);
      }
      break;
    case 2:  // two rooms joined by two doorways
      fill_rect(image, 79, 0, 81, 30, kWall);
      fill_rect(image, 79, 50, 81, 75, kWall);
      fill_rect(image, 79, 95, 81, kHeight, kWall);
      break;
    case 3:  // serpentine corridor
      fill_rect(image, 0, 39, 120, 41, kWall);
      fill_rect(image, 40, 79, kWidth, 81, kWall);
      break;
    default:
      throw Error(ErrorCode::InvalidConfig, "synthetic world index must be 1, 2 or 3");
  }
  return image;
}

}  // namespace sango
