#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sango/geometry.hpp"

namespace sango {

enum class CellKind : std::uint8_t { Free, Boundary, StaticObstacle };

/// Occupancy grid. Immutable after construction; the perimeter is always Boundary.
class GridWorld {
 public:
  static constexpr int kMinSide = 8;

  /// `cells` is row-major with row 0 at the bottom. Perimeter cells are
  /// overwritten with Boundary. Throws DegenerateWorld for undersized grids
  /// or grids without a Free cell.
  GridWorld(int width, int height, std::vector<CellKind> cells, double meters_per_cell = 1.0);

  /// Free interior with a Boundary perimeter.
  static GridWorld open(int width, int height, double meters_per_cell = 1.0);

  int width() const { return width_; }
  int height() const { return height_; }
  double meters_per_cell() const { return meters_per_cell_; }

  bool in_bounds(Cell c) const {
    return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_;
  }
  CellKind at(Cell c) const { return cells_[index(c)]; }
  bool is_free(Cell c) const { return in_bounds(c) && at(c) == CellKind::Free; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.col);
  }
  Cell cell_at(std::size_t index) const {
    return {static_cast<int>(index % static_cast<std::size_t>(width_)),
            static_cast<int>(index / static_cast<std::size_t>(width_))};
  }

  std::span<const CellKind> cells() const { return cells_; }
  std::size_t free_count() const { return free_count_; }
  /// StaticObstacle cells in row-major order.
  const std::vector<Cell>& static_cells() const { return static_cells_; }

  /// Distance from an interior point to the nearest perimeter cell center.
  double distance_to_boundary(Vec2 p) const;

  /// Returns a copy with the given interior cells marked StaticObstacle.
  GridWorld with_obstacles(std::span<const Cell> cells) const;

  friend bool operator==(const GridWorld& a, const GridWorld& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.meters_per_cell_ == b.meters_per_cell_ && a.cells_ == b.cells_;
  }

 private:
  int width_;
  int height_;
  double meters_per_cell_;
  std::vector<CellKind> cells_;
  std::vector<Cell> static_cells_;
  std::size_t free_count_ = 0;
};

/// Connected-component labels of Free cells under 8-connectivity; -1 for blocked cells.
std::vector<int> label_free_components(const GridWorld& world);

// ---------------------------------------------------------------------------
// Blueprint ingestion

/// 8-bit grayscale raster, row 0 at the top (image convention).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int col, int row) const {
    return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
};

struct BlueprintParams {
  int pixel_threshold = 128;
  int dilation_radius = 1;
  int min_component_area = 4;
};

/// Pixels darker than the threshold become obstacles, which are then dilated
/// with a square (Chebyshev) element; obstacle components (8-connected) below
/// `min_component_area` are erased. Image row 0 maps to the top grid row.
GridWorld load_blueprint(const GrayImage& image, const BlueprintParams& params,
                         double meters_per_cell = 0.1);

/// Nearest-neighbor resample by `factor` (> 0).
GrayImage scale_image(const GrayImage& image, double factor);

GrayImage read_pgm(std::istream& in);
GrayImage read_png(const std::string& path);
/// Dispatches on file magic (P5/P2 PGM or PNG).
GrayImage read_image(const std::string& path);
void write_pgm(std::ostream& out, const GrayImage& image);

// ---------------------------------------------------------------------------
// Procedural generation

struct CogLayout {
  GridWorld world;
  std::vector<Cell> static_cells;
  std::vector<std::pair<Cell, Cell>> dynamic_routes;  // (spawn, goal)
  Cell agent_start;
  Cell agent_goal;
};

inline constexpr int kMaxPlacementAttempts = 10'000;

/// Square `grid_size` world with randomly placed static obstacles, agent
/// start/goal (connected, at least `min_agent_separation` apart) and dynamic
/// spawn/goal pairs. Statics, agent cells and spawns are pairwise distinct.
/// Pure function of `seed`. Throws PlacementOverflow or NoAgentPath.
CogLayout generate_cog(int grid_size, int num_static, int num_dynamic, std::uint64_t seed,
                       double min_agent_separation = 0.0);

// ---------------------------------------------------------------------------
// Agent kinematics

inline constexpr int kNumActions = 9;

enum class Action : int {
  Up = 0,
  Down = 1,
  Left = 2,
  Right = 3,
  RightUp = 4,
  LeftUp = 5,
  RightDown = 6,
  LeftDown = 7,
  Stay = 8,
};

/// (dcol, drow) per action index, +row = up.
inline constexpr std::array<Cell, kNumActions> kActionOffsets{{
    {0, 1}, {0, -1}, {-1, 0}, {1, 0}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1}, {0, 0},
}};

struct AgentState {
  Cell position;
  Cell goal;
};

struct MoveOutcome {
  Cell position;
  bool blocked = false;
  CellKind blocked_by = CellKind::Free;  // Free when not blocked
};

/// Throws InvalidAction outside 0..8. Blocked moves leave the position unchanged.
MoveOutcome apply_action(const GridWorld& world, const AgentState& state, int action);

// ---------------------------------------------------------------------------
// SANGO-WORLD v1 text format: header line, then rows top (highest row) first.

void write_world(std::ostream& out, const GridWorld& world);
GridWorld read_world(std::istream& in);
void save_world(const std::string& path, const GridWorld& world);
GridWorld load_world(const std::string& path);

}  // namespace sango
