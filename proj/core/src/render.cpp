#include "sango/render.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <string_view>

#include "sango/error.hpp"

namespace sango {

namespace {

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(s.substr(0, comma));
    if (comma == std::string_view::npos) return out;
    s.remove_prefix(comma + 1);
  }
}

template <class T>
T field(std::string_view text, int line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) parse_fail(line, "bad field '" + std::string(text) + "'");
  return v;
}

// Calls row(fields, line) for each data row after the expected header.
template <class F>
void read_csv(std::istream& in, std::string_view header, std::size_t columns, F&& row) {
  std::string raw;
  int line = 0;
  bool seen_header = false;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '#') continue;
    if (!seen_header) {
      if (raw != header) parse_fail(line, "expected header '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    const auto parts = split(raw);
    if (parts.size() != columns) parse_fail(line, "expected " + std::to_string(columns) + " fields");
    row(parts, line);
  }
  if (!seen_header) parse_fail(line, "missing header");
}

PointRole parse_role(std::string_view s, int line) {
  for (PointRole r : {PointRole::Core, PointRole::Boundary, PointRole::Noise}) {
    if (s == to_string(r)) return r;
  }
  parse_fail(line, "unknown role '" + std::string(s) + "'");
}

void fill_disc(RgbImage& img, Vec2 c, double r, Rgb color) {
  for (int y = static_cast<int>(std::floor(c.y - r)); y <= static_cast<int>(std::ceil(c.y + r)); ++y) {
    for (int x = static_cast<int>(std::floor(c.x - r)); x <= static_cast<int>(std::ceil(c.x + r)); ++x) {
      const double dx = x + 0.5 - c.x;
      const double dy = y + 0.5 - c.y;
      if (dx * dx + dy * dy <= r * r) img.set(x, y, color);
    }
  }
}

void ring(RgbImage& img, Vec2 c, double r, double thickness, Rgb color) {
  const double outer = r + thickness / 2;
  const double inner = r - thickness / 2;
  for (int y = static_cast<int>(std::floor(c.y - outer)); y <= static_cast<int>(std::ceil(c.y + outer)); ++y) {
    for (int x = static_cast<int>(std::floor(c.x - outer)); x <= static_cast<int>(std::ceil(c.x + outer)); ++x) {
      const double d = std::hypot(x + 0.5 - c.x, y + 0.5 - c.y);
      if (d <= outer && d >= inner) img.set(x, y, color);
    }
  }
}

void line(RgbImage& img, Vec2 a, Vec2 b, double width, Rgb color) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const int n = std::max(1, static_cast<int>(std::ceil(len)));
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    fill_disc(img, {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}, width / 2, color);
  }
}

bool inside_polygon(const std::vector<Vec2>& poly, Vec2 p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

void star(RgbImage& img, Vec2 c, double r, Rgb color) {
  std::vector<Vec2> poly;
  for (int k = 0; k < 10; ++k) {
    const double radius = k % 2 == 0 ? r : r * 0.45;
    const double angle = -std::numbers::pi / 2 + k * std::numbers::pi / 5;
    poly.push_back({c.x + radius * std::cos(angle), c.y + radius * std::sin(angle)});
  }
  for (int y = static_cast<int>(std::floor(c.y - r)); y <= static_cast<int>(std::ceil(c.y + r)); ++y) {
    for (int x = static_cast<int>(std::floor(c.x - r)); x <= static_cast<int>(std::ceil(c.x + r)); ++x) {
      if (inside_polygon(poly, {x + 0.5, y + 0.5})) img.set(x, y, color);
    }
  }
}

void cross(RgbImage& img, Vec2 c, double r, double width, Rgb color) {
  line(img, {c.x - r, c.y - r}, {c.x + r, c.y + r}, width, color);
  line(img, {c.x - r, c.y + r}, {c.x + r, c.y - r}, width, color);
}

}  // namespace

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
  std::vector<TrajectoryRow> rows;
  read_csv(in, "step,obstacle_id,x,y,policy", 5, [&](const std::vector<std::string_view>& f, int line) {
    rows.push_back({field<long>(f[0], line), field<int>(f[1], line), {field<double>(f[2], line), field<double>(f[3], line)}});
  });
  return rows;
}

std::vector<ClusterRow> read_cluster_csv(std::istream& in) {
  std::vector<ClusterRow> rows;
  read_csv(in, "step,cluster_id,obstacle_id,role", 4, [&](const std::vector<std::string_view>& f, int line) {
    rows.push_back({field<long>(f[0], line), field<int>(f[1], line), field<int>(f[2], line), parse_role(f[3], line)});
  });
  return rows;
}

RgbImage::RgbImage(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < pixels.size(); i += 3) std::copy(fill.begin(), fill.end(), pixels.begin() + i);
}

Rgb RgbImage::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void RgbImage::set(int x, int y, Rgb color) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  std::copy(color.begin(), color.end(), pixels.begin() + i);
}

Vec2 pixel_center(Vec2 grid_point, int grid_height, const RenderOptions& options) {
  const double s = options.cell_pixels;
  return {(grid_point.x + 0.5) * s, (grid_height - 0.5 - grid_point.y) * s};
}

RgbImage render_replay(const GridWorld& world, const EpisodeLog& log, const std::vector<TrajectoryRow>& trajectories,
                       const std::vector<ClusterRow>& clusters, long step, const RenderOptions& options) {
  const int s = options.cell_pixels;
  RgbImage img(world.width() * s, world.height() * s, palette::kFree);
  for (int row = 0; row < world.height(); ++row) {
    for (int col = 0; col < world.width(); ++col) {
      const CellKind kind = world.at({col, row});
      if (kind == CellKind::Free) continue;
      const Rgb color = kind == CellKind::Boundary ? palette::kBoundary : palette::kStatic;
      const int top = (world.height() - 1 - row) * s;
      for (int y = top; y < top + s; ++y) {
        for (int x = col * s; x < (col + 1) * s; ++x) img.set(x, y, color);
      }
    }
  }
  auto px = [&](Vec2 p) { return pixel_center(p, world.height(), options); };

  std::vector<const TrajectoryRow*> tracks;
  for (const TrajectoryRow& r : trajectories) {
    if (r.step <= step) tracks.push_back(&r);
  }
  std::stable_sort(tracks.begin(), tracks.end(),
                   [](const TrajectoryRow* a, const TrajectoryRow* b) { return a->obstacle_id < b->obstacle_id; });
  for (std::size_t i = 1; i < tracks.size(); ++i) {
    if (tracks[i]->obstacle_id == tracks[i - 1]->obstacle_id) {
      line(img, px(tracks[i - 1]->position), px(tracks[i]->position), 2.0, palette::kObstacleTrack);
    }
  }

  Cell agent = log.start;
  for (const StepRecord& r : log.steps) {
    if (r.step > step) break;
    line(img, px(to_point(agent)), px(to_point(r.agent)), 3.0, palette::kAgentPath);
    agent = r.agent;
  }
  fill_disc(img, px(to_point(log.start)), s * 0.2, palette::kAgent);

  std::vector<Vec2> current(trajectories.size());
  std::vector<int> current_ids;
  for (const TrajectoryRow& r : trajectories) {
    if (r.step == step) {
      fill_disc(img, px(r.position), s * 0.4, palette::kObstacle);
      current_ids.push_back(r.obstacle_id);
      current[current_ids.size() - 1] = r.position;
    }
  }
  for (const ClusterRow& c : clusters) {
    if (c.step != step || c.role == PointRole::Noise) continue;
    for (std::size_t i = 0; i < current_ids.size(); ++i) {
      if (current_ids[i] == c.obstacle_id) ring(img, px(current[i]), s * 0.55, 2.0, palette::kCluster);
    }
  }

  cross(img, px(to_point(log.goal)), s * 0.4, 3.0, palette::kGoal);
  star(img, px(to_point(agent)), s * 0.5, palette::kAgent);
  return img;
}

void write_png(const std::string& path, const RgbImage& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, "cannot write PNG '" + path + "': " + png.message);
  }
}

}  // namespace sango
