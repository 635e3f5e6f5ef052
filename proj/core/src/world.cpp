#include "sango/world.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "sango/error.hpp"
#include "sango/rng.hpp"

namespace sango {

GridWorld::GridWorld(int width, int height, std::vector<CellKind> cells, double meters_per_cell)
    : width_(width), height_(height), meters_per_cell_(meters_per_cell), cells_(std::move(cells)) {
  if (width_ < kMinSide || height_ < kMinSide) {
    throw Error(ErrorCode::DegenerateWorld, "world must be at least 8x8, got " +
                                                std::to_string(width_) + "x" + std::to_string(height_));
  }
  if (cells_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
    throw Error(ErrorCode::DegenerateWorld, "cell array does not match dimensions");
  }
  if (!(meters_per_cell_ > 0.0)) {
    throw Error(ErrorCode::DegenerateWorld, "meters_per_cell must be positive");
  }
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      const bool perimeter = r == 0 || c == 0 || r == height_ - 1 || c == width_ - 1;
      CellKind& kind = cells_[index({c, r})];
      if (perimeter) kind = CellKind::Boundary;
      // Boundary is reserved for the perimeter.
      if (!perimeter && kind == CellKind::Boundary) kind = CellKind::StaticObstacle;
      if (kind == CellKind::Free) ++free_count_;
      if (kind == CellKind::StaticObstacle) static_cells_.push_back({c, r});
    }
  }
  if (free_count_ == 0) throw Error(ErrorCode::DegenerateWorld, "no free cell in world");
}

GridWorld GridWorld::open(int width, int height, double meters_per_cell) {
  const std::size_t n = static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0));
  return GridWorld(width, height, std::vector<CellKind>(n, CellKind::Free), meters_per_cell);
}

double GridWorld::distance_to_boundary(Vec2 p) const {
  return std::min({p.x, p.y, static_cast<double>(width_ - 1) - p.x,
                   static_cast<double>(height_ - 1) - p.y});
}

GridWorld GridWorld::with_obstacles(std::span<const Cell> cells) const {
  std::vector<CellKind> copy = cells_;
  for (Cell c : cells) {
    if (in_bounds(c) && copy[index(c)] == CellKind::Free) copy[index(c)] = CellKind::StaticObstacle;
  }
  return GridWorld(width_, height_, std::move(copy), meters_per_cell_);
}

std::vector<int> label_free_components(const GridWorld& world) {
  std::vector<int> label(world.cells().size(), -1);
  std::vector<Cell> stack;
  int next = 0;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (world.cells()[i] != CellKind::Free || label[i] >= 0) continue;
    label[i] = next;
    stack.push_back(world.cell_at(i));
    while (!stack.empty()) {
      const Cell c = stack.back();
      stack.pop_back();
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const Cell n{c.col + dc, c.row + dr};
          if (!world.is_free(n)) continue;
          int& l = label[world.index(n)];
          if (l < 0) {
            l = next;
            stack.push_back(n);
          }
        }
      }
    }
    ++next;
  }
  return label;
}

// ---------------------------------------------------------------------------

namespace {

using Mask = std::vector<std::uint8_t>;

Mask dilate(const Mask& mask, int width, int height, int radius) {
  if (radius <= 0) return mask;
  Mask horizontal(mask.size(), 0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      std::uint8_t v = 0;
      for (int k = std::max(0, c - radius); k <= std::min(width - 1, c + radius) && !v; ++k) {
        v = mask[static_cast<std::size_t>(r * width + k)];
      }
      horizontal[static_cast<std::size_t>(r * width + c)] = v;
    }
  }
  Mask out(mask.size(), 0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      std::uint8_t v = 0;
      for (int k = std::max(0, r - radius); k <= std::min(height - 1, r + radius) && !v; ++k) {
        v = horizontal[static_cast<std::size_t>(k * width + c)];
      }
      out[static_cast<std::size_t>(r * width + c)] = v;
    }
  }
  return out;
}

void remove_small_components(Mask& mask, int width, int height, int min_area) {
  if (min_area <= 0) return;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<int> component;
  std::vector<int> stack;
  for (int start = 0; start < width * height; ++start) {
    if (!mask[static_cast<std::size_t>(start)] || seen[static_cast<std::size_t>(start)]) continue;
    component.clear();
    stack.push_back(start);
    seen[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      component.push_back(i);
      const int r = i / width, c = i % width;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nc < 0 || nr >= height || nc >= width) continue;
          const auto j = static_cast<std::size_t>(nr * width + nc);
          if (mask[j] && !seen[j]) {
            seen[j] = 1;
            stack.push_back(static_cast<int>(j));
          }
        }
      }
    }
    if (static_cast<int>(component.size()) < min_area) {
      for (int i : component) mask[static_cast<std::size_t>(i)] = 0;
    }
  }
}

}  // namespace

GridWorld load_blueprint(const GrayImage& image, const BlueprintParams& params, double meters_per_cell) {
  if (image.width <= 0 || image.height <= 0 || image.pixels.empty()) {
    throw Error(ErrorCode::EmptyImage, "blueprint image has no pixels");
  }
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height)) {
    throw Error(ErrorCode::InvalidConfig, "blueprint pixel count does not match its dimensions");
  }
  if (params.pixel_threshold < 0 || params.pixel_threshold > 255 || params.dilation_radius < 0 ||
      params.min_component_area < 0) {
    throw Error(ErrorCode::InvalidConfig, "blueprint parameters out of range");
  }
  const int w = image.width, h = image.height;
  Mask mask(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = image.pixels[i] < params.pixel_threshold ? 1 : 0;
  }
  mask = dilate(mask, w, h, params.dilation_radius);
  remove_small_components(mask, w, h, params.min_component_area);

  std::vector<CellKind> cells(mask.size(), CellKind::Free);
  for (int img_row = 0; img_row < h; ++img_row) {
    const int grid_row = h - 1 - img_row;
    for (int c = 0; c < w; ++c) {
      if (mask[static_cast<std::size_t>(img_row * w + c)]) {
        cells[static_cast<std::size_t>(grid_row * w + c)] = CellKind::StaticObstacle;
      }
    }
  }
  return GridWorld(w, h, std::move(cells), meters_per_cell);
}

GrayImage scale_image(const GrayImage& image, double factor) {
  if (!(factor > 0.0)) throw Error(ErrorCode::InvalidConfig, "scale factor must be positive");
  GrayImage out;
  out.width = std::max(1, static_cast<int>(std::lround(image.width * factor)));
  out.height = std::max(1, static_cast<int>(std::lround(image.height * factor)));
  out.pixels.resize(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height));
  for (int r = 0; r < out.height; ++r) {
    const int sr = std::min(image.height - 1, static_cast<int>((r + 0.5) / factor));
    for (int c = 0; c < out.width; ++c) {
      const int sc = std::min(image.width - 1, static_cast<int>((c + 0.5) / factor));
      out.pixels[static_cast<std::size_t>(r * out.width + c)] = image.at(sc, sr);
    }
  }
  return out;
}

namespace {

// Reads the next PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string token;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(ch);
  }
  return token;
}

}  // namespace

GrayImage read_pgm(std::istream& in) {
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") throw Error(ErrorCode::ParseError, "not a PGM image");
  GrayImage img;
  int maxval = 0;
  try {
    img.width = std::stoi(pgm_token(in));
    img.height = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "malformed PGM header");
  }
  if (img.width <= 0 || img.height <= 0) throw Error(ErrorCode::EmptyImage, "PGM has zero size");
  if (maxval <= 0 || maxval > 255) throw Error(ErrorCode::ParseError, "only 8-bit PGM is supported");
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  if (magic == "P5") {
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
      throw Error(ErrorCode::ParseError, "truncated PGM raster");
    }
  } else {
    for (auto& p : img.pixels) {
      int v;
      if (!(in >> v)) throw Error(ErrorCode::ParseError, "truncated PGM raster");
      p = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(p * 255 / maxval);
  }
  return img;
}

void write_pgm(std::ostream& out, const GrayImage& image) {
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

GrayImage read_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(ErrorCode::IoError, "cannot read PNG '" + path + "': " + png.message);
  }
  png.format = PNG_FORMAT_GRAY;
  GrayImage img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(ErrorCode::IoError, "cannot decode PNG '" + path + "'");
  }
  return img;
}

GrayImage read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open image '" + path + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() >= 4 && static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P' &&
      magic[2] == 'N' && magic[3] == 'G') {
    return read_png(path);
  }
  in.clear();
  in.seekg(0);
  return read_pgm(in);
}

// ---------------------------------------------------------------------------

CogLayout generate_cog(int grid_size, int num_static, int num_dynamic, std::uint64_t seed,
                       double min_agent_separation) {
  if (num_static < 0 || num_dynamic < 0) throw Error(ErrorCode::InvalidConfig, "negative obstacle count");
  const GridWorld open = GridWorld::open(grid_size, grid_size);
  if (static_cast<std::size_t>(num_static) + static_cast<std::size_t>(num_dynamic) + 2 >= open.free_count()) {
    throw Error(ErrorCode::PlacementOverflow, "too many placements for a " + std::to_string(grid_size) + " grid");
  }
  Rng rng(seed);
  const int interior = grid_size - 2;
  auto random_interior = [&] {
    const int c = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(interior)));
    const int r = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(interior)));
    return Cell{c, r};
  };
  std::vector<std::uint8_t> used(open.cells().size(), 0);

  // Draws until `accept` holds on an unused Free cell of `world`.
  auto place = [&](const GridWorld& world, auto&& accept, const char* what) {
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      const Cell c = random_interior();
      if (!world.is_free(c) || used[world.index(c)] || !accept(c)) continue;
      used[world.index(c)] = 1;
      return c;
    }
    throw Error(ErrorCode::PlacementOverflow, std::string("rejection sampling exhausted placing ") + what);
  };

  std::vector<Cell> statics;
  statics.reserve(static_cast<std::size_t>(num_static));
  for (int i = 0; i < num_static; ++i) {
    statics.push_back(place(open, [](Cell) { return true; }, "static obstacle"));
  }
  GridWorld world = open.with_obstacles(statics);
  const std::vector<int> component = label_free_components(world);
  auto same_component = [&](Cell a, Cell b) { return component[world.index(a)] == component[world.index(b)]; };

  // Draws an unused (from, to) pair of distinct Free cells in one component.
  auto place_pair = [&](double min_separation) -> std::optional<std::pair<Cell, Cell>> {
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      const Cell from = random_interior();
      const Cell to = random_interior();
      if (from == to || !world.is_free(from) || !world.is_free(to) || used[world.index(from)] ||
          used[world.index(to)] || !same_component(from, to) ||
          distance(to_point(from), to_point(to)) < min_separation) {
        continue;
      }
      return std::pair{from, to};
    }
    return std::nullopt;
  };

  const auto agent = place_pair(min_agent_separation);
  if (!agent) throw Error(ErrorCode::NoAgentPath, "no connected agent start and goal");
  const auto [start, goal] = *agent;
  used[world.index(start)] = 1;
  used[world.index(goal)] = 1;

  std::vector<std::pair<Cell, Cell>> routes;
  routes.reserve(static_cast<std::size_t>(num_dynamic));
  for (int i = 0; i < num_dynamic; ++i) {
    const auto route = place_pair(0.0);
    if (!route) throw Error(ErrorCode::PlacementOverflow, "rejection sampling exhausted placing dynamic route");
    // Goals are not reserved, so later spawns and goals may reuse them.
    used[world.index(route->first)] = 1;
    routes.push_back(*route);
  }
  return CogLayout{std::move(world), std::move(statics), std::move(routes), start, goal};
}

// ---------------------------------------------------------------------------

MoveOutcome apply_action(const GridWorld& world, const AgentState& state, int action) {
  if (action < 0 || action >= kNumActions) {
    throw Error(ErrorCode::InvalidAction, "action " + std::to_string(action) + " outside 0..8");
  }
  const Cell offset = kActionOffsets[static_cast<std::size_t>(action)];
  const Cell target{state.position.col + offset.col, state.position.row + offset.row};
  if (!world.in_bounds(target)) return {state.position, true, CellKind::Boundary};
  const CellKind kind = world.at(target);
  if (kind != CellKind::Free) return {state.position, true, kind};
  return {target, false, CellKind::Free};
}

// ---------------------------------------------------------------------------

void write_world(std::ostream& out, const GridWorld& world) {
  out << "SANGO-WORLD v1 " << world.width() << ' ' << world.height() << ' '
      << std::setprecision(17) << world.meters_per_cell() << '\n';
  std::string line(static_cast<std::size_t>(world.width()), '.');
  for (int r = world.height() - 1; r >= 0; --r) {
    for (int c = 0; c < world.width(); ++c) {
      switch (world.at({c, r})) {
        case CellKind::Free: line[static_cast<std::size_t>(c)] = '.'; break;
        case CellKind::Boundary: line[static_cast<std::size_t>(c)] = 'B'; break;
        case CellKind::StaticObstacle: line[static_cast<std::size_t>(c)] = '#'; break;
      }
    }
    out << line << '\n';
  }
}

GridWorld read_world(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::ParseError, "line 1: missing world header");
  std::istringstream hs(header);
  std::string magic, version;
  int width = 0, height = 0;
  double mpc = 0.0;
  if (!(hs >> magic >> version >> width >> height >> mpc) || magic != "SANGO-WORLD" || version != "v1") {
    throw Error(ErrorCode::ParseError, "line 1: expected 'SANGO-WORLD v1 <width> <height> <meters_per_cell>'");
  }
  if (width <= 0 || height <= 0) throw Error(ErrorCode::ParseError, "line 1: non-positive dimensions");
  std::vector<CellKind> cells(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  std::string line;
  for (int i = 0; i < height; ++i) {
    const int line_no = i + 2;
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": missing grid row");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != width) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(width) + " cells");
    }
    const int row = height - 1 - i;
    for (int c = 0; c < width; ++c) {
      CellKind kind;
      switch (line[static_cast<std::size_t>(c)]) {
        case '.': kind = CellKind::Free; break;
        case '#': kind = CellKind::StaticObstacle; break;
        case 'B': kind = CellKind::Boundary; break;
        default:
          throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad cell character '" +
                                                 std::string(1, line[static_cast<std::size_t>(c)]) + "'");
      }
      cells[static_cast<std::size_t>(row * width + c)] = kind;
    }
  }
  return GridWorld(width, height, std::move(cells), mpc);
}

void save_world(const std::string& path, const GridWorld& world) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write world file '" + path + "'");
  write_world(out, world);
  if (!out) throw Error(ErrorCode::IoError, "failed writing world file '" + path + "'");
}

GridWorld load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open world file '" + path + "'");
  return read_world(in);
}

}  // namespace sango
