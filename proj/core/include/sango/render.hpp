#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sango/env.hpp"
#include "sango/geometry.hpp"
#include "sango/grouping.hpp"
#include "sango/world.hpp"

namespace sango {

/// One row of a trajectory trace.
struct TrajectoryRow {
  long step = 0;
  int obstacle_id = 0;
  Vec2 position;
};

/// One row of a cluster trace; noise rows carry cluster_id -1.
struct ClusterRow {
  long step = 0;
  int cluster_id = -1;
  int obstacle_id = 0;
  PointRole role = PointRole::Noise;
};

/// Both throw ParseError naming the offending line.
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in);
std::vector<ClusterRow> read_cluster_csv(std::istream& in);

using Rgb = std::array<std::uint8_t, 3>;

namespace palette {
inline constexpr Rgb kFree{255, 255, 255};
inline constexpr Rgb kBoundary{64, 64, 64};
inline constexpr Rgb kStatic{40, 80, 200};
inline constexpr Rgb kObstacle{230, 0, 230};
inline constexpr Rgb kObstacleTrack{245, 170, 245};
inline constexpr Rgb kAgent{0, 170, 0};
inline constexpr Rgb kAgentPath{120, 210, 120};
inline constexpr Rgb kGoal{220, 0, 0};
inline constexpr Rgb kCluster{0, 220, 220};
}  // namespace palette

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill);

  Rgb at(int x, int y) const;
  /// Ignores coordinates outside the image.
  void set(int x, int y, Rgb color);
};

struct RenderOptions {
  int cell_pixels = 16;
};

/// Static plot of an episode up to and including `step`: the grid, the
/// agent path ending in a star, the goal cross, obstacle tracks with circles
/// at their position at `step`, and cyan rings around members of clusters
/// recorded at `step`.
RgbImage render_replay(const GridWorld& world, const EpisodeLog& log, const std::vector<TrajectoryRow>& trajectories,
                       const std::vector<ClusterRow>& clusters, long step, const RenderOptions& options = {});

/// Pixel centre of a grid coordinate; grid rows grow upward, image rows downward.
Vec2 pixel_center(Vec2 grid_point, int grid_height, const RenderOptions& options);

/// Throws IoError.
void write_png(const std::string& path, const RgbImage& image);

}  // namespace sango
