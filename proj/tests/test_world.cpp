#include <gtest/gtest.h>

#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "sango/rng.hpp"
#include "sango/world.hpp"
#include "test_support.hpp"

using namespace sango;
using sango::testing::expect_code;

namespace {

GrayImage white(int w, int h) { return {w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w * h), 255)}; }

void set_pixel(GrayImage& img, int col, int row, std::uint8_t v) {
  img.pixels[static_cast<std::size_t>(row * img.width + col)] = v;
}

// Obstacle mask in image coordinates from a loaded world.
std::vector<int> world_mask(const GridWorld& w) {
  std::vector<int> m(static_cast<std::size_t>(w.width() * w.height()));
  for (int r = 0; r < w.height(); ++r) {
    for (int c = 0; c < w.width(); ++c) {
      m[static_cast<std::size_t>(r * w.width() + c)] = w.at({c, w.height() - 1 - r}) != CellKind::Free;
    }
  }
  return m;
}

// Union-find component sizes under 8-connectivity.
std::vector<int> component_sizes(const std::vector<int>& mask, int w, int h) {
  std::vector<int> parent(mask.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    return x;
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask[static_cast<std::size_t>(r * w + c)]) continue;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nc < 0 || nr >= h || nc >= w || !mask[static_cast<std::size_t>(nr * w + nc)]) continue;
          parent[static_cast<std::size_t>(find(r * w + c))] = find(nr * w + nc);
        }
      }
    }
  }
  std::vector<int> count(mask.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) ++count[static_cast<std::size_t>(find(static_cast<int>(i)))];
  }
  std::vector<int> size(mask.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) size[i] = count[static_cast<std::size_t>(find(static_cast<int>(i)))];
  }
  return size;
}

// 8-connected reachability over Free cells by BFS.
bool reachable(const GridWorld& w, Cell a, Cell b) {
  std::vector<std::uint8_t> seen(w.cells().size(), 0);
  std::queue<Cell> q;
  q.push(a);
  seen[w.index(a)] = 1;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop();
    if (c == b) return true;
    for (const Cell d : kActionOffsets) {
      const Cell n{c.col + d.col, c.row + d.row};
      if (w.is_free(n) && !seen[w.index(n)]) {
        seen[w.index(n)] = 1;
        q.push(n);
      }
    }
  }
  return false;
}

}  // namespace

TEST(GridWorld, PerimeterIsAlwaysBoundary) {
  std::vector<CellKind> cells(100, CellKind::StaticObstacle);
  cells[55] = CellKind::Free;
  const GridWorld w(10, 10, cells);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(w.at({i, 0}), CellKind::Boundary);
    EXPECT_EQ(w.at({i, 9}), CellKind::Boundary);
    EXPECT_EQ(w.at({0, i}), CellKind::Boundary);
    EXPECT_EQ(w.at({9, i}), CellKind::Boundary);
  }
  EXPECT_EQ(w.free_count(), 1u);
}

TEST(GridWorld, InteriorBoundaryBecomesStatic) {
  std::vector<CellKind> cells(64, CellKind::Free);
  cells[3 * 8 + 3] = CellKind::Boundary;
  const GridWorld w(8, 8, cells);
  EXPECT_EQ(w.at({3, 3}), CellKind::StaticObstacle);
}

TEST(GridWorld, DegenerateWorlds) {
  expect_code([] { GridWorld::open(7, 20); }, ErrorCode::DegenerateWorld);
  expect_code([] { GridWorld(8, 8, std::vector<CellKind>(63, CellKind::Free)); }, ErrorCode::DegenerateWorld);
  expect_code([] { GridWorld(8, 8, std::vector<CellKind>(64, CellKind::StaticObstacle)); },
              ErrorCode::DegenerateWorld);
}

TEST(GridWorld, DistanceToBoundary) {
  const GridWorld w = GridWorld::open(20, 10);
  EXPECT_DOUBLE_EQ(w.distance_to_boundary({1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(w.distance_to_boundary({10, 5}), 4.0);
  EXPECT_DOUBLE_EQ(w.distance_to_boundary({17.5, 5}), 1.5);
}

TEST(Blueprint, VerticalLineDilatesToThreeColumns) {
  GrayImage img = white(32, 32);
  for (int r = 0; r < 32; ++r) set_pixel(img, 16, r, 0);
  const GridWorld w = load_blueprint(img, {128, 1, 0});
  for (int r = 1; r < 31; ++r) {
    for (int c = 1; c < 31; ++c) {
      const CellKind expected = (c >= 15 && c <= 17) ? CellKind::StaticObstacle : CellKind::Free;
      EXPECT_EQ(w.at({c, r}), expected) << c << "," << r;
    }
  }
}

TEST(Blueprint, WhiteImageIsOpen) {
  const GridWorld w = load_blueprint(white(16, 12), {});
  EXPECT_EQ(w.free_count(), 14u * 10u);
  EXPECT_TRUE(w.static_cells().empty());
}

TEST(Blueprint, ThresholdIsStrict) {
  GrayImage img = white(10, 10);
  set_pixel(img, 4, 4, 128);
  set_pixel(img, 6, 6, 127);
  const GridWorld w = load_blueprint(img, {128, 0, 0});
  EXPECT_EQ(w.at({4, 10 - 1 - 4}), CellKind::Free);
  EXPECT_EQ(w.at({6, 10 - 1 - 6}), CellKind::StaticObstacle);
}

TEST(Blueprint, ImageTopMapsToHighestRow) {
  GrayImage img = white(10, 10);
  set_pixel(img, 3, 2, 0);
  const GridWorld w = load_blueprint(img, {128, 0, 0});
  EXPECT_EQ(w.at({3, 7}), CellKind::StaticObstacle);
  EXPECT_EQ(w.static_cells().size(), 1u);
}

TEST(Blueprint, SmallComponentsRemoved) {
  GrayImage img = white(12, 12);
  set_pixel(img, 3, 3, 0);  // area 1
  set_pixel(img, 7, 7, 0);  // diagonal pair, area 2 under 8-connectivity
  set_pixel(img, 8, 8, 0);
  EXPECT_EQ(load_blueprint(img, {128, 0, 2}).static_cells().size(), 2u);
  EXPECT_EQ(load_blueprint(img, {128, 0, 3}).static_cells().size(), 0u);
  EXPECT_EQ(load_blueprint(img, {128, 0, 1}).static_cells().size(), 3u);
}

TEST(Blueprint, MatchesBruteForceOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 8 + static_cast<int>(rng.uniform_index(12));
    const int h = 8 + static_cast<int>(rng.uniform_index(12));
    GrayImage img = white(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_index(256));
    for (auto& p : img.pixels) p = p < 20 ? 0 : 255;  // sparse dark pixels
    const BlueprintParams params{128, static_cast<int>(rng.uniform_index(3)), static_cast<int>(rng.uniform_index(6))};

    std::vector<int> dilated(img.pixels.size(), 0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        for (int rr = 0; rr < h; ++rr) {
          for (int cc = 0; cc < w; ++cc) {
            if (std::max(std::abs(rr - r), std::abs(cc - c)) <= params.dilation_radius &&
                img.at(cc, rr) < params.pixel_threshold) {
              dilated[static_cast<std::size_t>(r * w + c)] = 1;
            }
          }
        }
      }
    }
    const std::vector<int> sizes = component_sizes(dilated, w, h);
    const std::vector<int> got = world_mask(load_blueprint(img, params));
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const auto i = static_cast<std::size_t>(r * w + c);
        const bool perimeter = r == 0 || c == 0 || r == h - 1 || c == w - 1;
        const int expected = perimeter ? 1 : (dilated[i] && sizes[i] >= params.min_component_area);
        ASSERT_EQ(got[i], expected) << "trial " << trial << " at " << c << "," << r;
      }
    }
  }
}

TEST(Blueprint, Errors) {
  expect_code([] { load_blueprint(GrayImage{}, {}); }, ErrorCode::EmptyImage);
  expect_code([] { load_blueprint(white(10, 10), {128, -1, 0}); }, ErrorCode::InvalidConfig);
}

TEST(Blueprint, ScaleImageNearestNeighbour) {
  GrayImage img = white(10, 10);
  set_pixel(img, 0, 0, 0);
  const GrayImage up = scale_image(img, 2.0);
  EXPECT_EQ(up.width, 20);
  EXPECT_EQ(up.at(1, 1), 0);
  EXPECT_EQ(up.at(2, 2), 255);
  EXPECT_EQ(scale_image(img, 0.4).width, 4);
}

TEST(Blueprint, PgmRoundTrip) {
  GrayImage img = white(9, 7);
  set_pixel(img, 2, 5, 17);
  std::stringstream ss;
  write_pgm(ss, img);
  const GrayImage back = read_pgm(ss);
  EXPECT_EQ(back.width, 9);
  EXPECT_EQ(back.height, 7);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(Blueprint, AsciiPgm) {
  std::stringstream ss("P2\n# comment\n3 2\n255\n0 255 10\n20 30 40\n");
  const GrayImage img = read_pgm(ss);
  EXPECT_EQ(img.at(2, 0), 10);
  EXPECT_EQ(img.at(0, 1), 20);
}

TEST(Blueprint, UnreadableImage) {
  expect_code([] { read_image("/nonexistent/blueprint.png"); }, ErrorCode::IoError);
}

TEST(Cog, CountsDistinctnessAndConnectivity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const CogLayout l = generate_cog(20, 10, 10, seed, 8.0);
    EXPECT_EQ(l.world.static_cells().size(), 10u);
    EXPECT_EQ(l.dynamic_routes.size(), 10u);
    std::set<Cell> placed(l.static_cells.begin(), l.static_cells.end());
    placed.insert(l.agent_start);
    placed.insert(l.agent_goal);
    for (const auto& [spawn, goal] : l.dynamic_routes) {
      placed.insert(spawn);
      EXPECT_TRUE(l.world.is_free(goal));
      EXPECT_TRUE(reachable(l.world, spawn, goal));
    }
    EXPECT_EQ(placed.size(), 10u + 2u + 10u) << "seed " << seed;
    EXPECT_TRUE(l.world.is_free(l.agent_start));
    EXPECT_TRUE(reachable(l.world, l.agent_start, l.agent_goal));
    EXPECT_GE(distance(to_point(l.agent_start), to_point(l.agent_goal)), 8.0);
  }
}

TEST(Cog, Deterministic) {
  const CogLayout a = generate_cog(20, 40, 30, 1234);
  const CogLayout b = generate_cog(20, 40, 30, 1234);
  EXPECT_EQ(a.world, b.world);
  EXPECT_EQ(a.dynamic_routes, b.dynamic_routes);
  EXPECT_EQ(a.agent_start, b.agent_start);
  EXPECT_EQ(a.agent_goal, b.agent_goal);
  EXPECT_FALSE(generate_cog(20, 40, 30, 1235).world == a.world);
}

TEST(Cog, PlacementOverflow) {
  expect_code([] { generate_cog(10, 40, 30, 1); }, ErrorCode::PlacementOverflow);
}

TEST(Cog, UnreachableSeparationIsNoAgentPath) {
  expect_code([] { generate_cog(10, 0, 0, 1, 100.0); }, ErrorCode::NoAgentPath);
}

TEST(Actions, TableMatchesKingMoves) {
  const GridWorld w = GridWorld::open(10, 10);
  const AgentState s{{5, 5}, {1, 1}};
  const Cell expected[kNumActions] = {{5, 6}, {5, 4}, {4, 5}, {6, 5}, {6, 6}, {4, 6}, {6, 4}, {4, 4}, {5, 5}};
  for (int a = 0; a < kNumActions; ++a) {
    const MoveOutcome m = apply_action(w, s, a);
    EXPECT_EQ(m.position, expected[a]) << "action " << a;
    EXPECT_FALSE(m.blocked);
  }
}

TEST(Actions, BlockedMovesKeepPosition) {
  const GridWorld w = GridWorld::open(10, 10).with_obstacles(std::vector<Cell>{{3, 2}});
  const MoveOutcome into_static = apply_action(w, {{2, 2}, {8, 8}}, static_cast<int>(Action::Right));
  EXPECT_EQ(into_static.position, (Cell{2, 2}));
  EXPECT_TRUE(into_static.blocked);
  EXPECT_EQ(into_static.blocked_by, CellKind::StaticObstacle);
  const MoveOutcome into_wall = apply_action(w, {{1, 1}, {8, 8}}, static_cast<int>(Action::LeftDown));
  EXPECT_EQ(into_wall.position, (Cell{1, 1}));
  EXPECT_EQ(into_wall.blocked_by, CellKind::Boundary);
}

TEST(Actions, InvalidAction) {
  const GridWorld w = GridWorld::open(10, 10);
  expect_code([&] { apply_action(w, {{2, 2}, {8, 8}}, 9); }, ErrorCode::InvalidAction);
  expect_code([&] { apply_action(w, {{2, 2}, {8, 8}}, -1); }, ErrorCode::InvalidAction);
}

TEST(WorldFile, RoundTrip) {
  const CogLayout l = generate_cog(20, 40, 0, 7);
  std::stringstream ss;
  write_world(ss, l.world);
  EXPECT_EQ(read_world(ss), l.world);
}

TEST(WorldFile, BlueprintImportRoundTrip) {
  const GridWorld w = load_blueprint(scale_image(white(40, 30), 1.0), {128, 1, 4}, 0.1);
  std::stringstream ss;
  write_world(ss, w);
  const GridWorld back = read_world(ss);
  EXPECT_EQ(back, w);
  EXPECT_DOUBLE_EQ(back.meters_per_cell(), 0.1);
}

TEST(WorldFile, ParseErrorsNameTheLine) {
  std::stringstream bad_header("SANGO-WORLD v2 8 8 1\n");
  expect_code([&] { read_world(bad_header); }, ErrorCode::ParseError, "line 1");
  std::stringstream bad_char("SANGO-WORLD v1 8 8 1\nBBBBBBBB\nB......B\nB..x...B\n");
  expect_code([&] { read_world(bad_char); }, ErrorCode::ParseError, "line 4");
}

TEST(Components, LabelsMatchReachability) {
  const CogLayout l = generate_cog(16, 60, 0, 3);
  const std::vector<int> labels = label_free_components(l.world);
  std::vector<Cell> free;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) free.push_back(l.world.cell_at(i));
  }
  for (std::size_t i = 0; i < free.size(); i += 7) {
    for (std::size_t j = 0; j < free.size(); j += 5) {
      EXPECT_EQ(labels[l.world.index(free[i])] == labels[l.world.index(free[j])],
                reachable(l.world, free[i], free[j]));
    }
  }
}
