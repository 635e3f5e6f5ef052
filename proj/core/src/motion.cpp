#include "sango/motion.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <queue>

#include "sango/error.hpp"

namespace sango {

std::string_view to_string(MotionPolicy policy) {
  switch (policy) {
    case MotionPolicy::NoisyAStar: return "noisy_astar";
    case MotionPolicy::SocialForce: return "sfm";
    case MotionPolicy::Orca: return "orca";
  }
  return "unknown";
}

void MotionConfig::validate() const {
  const bool ok = sfm.relaxation_time > 0 && sfm.interaction_strength > 0 && sfm.interaction_range > 0 &&
                  sfm.obstacle_strength > 0 && sfm.obstacle_range > 0 && sfm.substeps >= 1 &&
                  orca.time_horizon > 0 && orca.neighbor_distance > 0 && orca.max_neighbors >= 0 &&
                  astar_noise >= 0 && dt > 0 && max_speed > 0 && min_preferred_speed > 0 &&
                  max_preferred_speed >= min_preferred_speed && goal_tolerance > 0 && waypoint_tolerance > 0 &&
                  min_respawn_distance >= 0 && policy_mix[0] >= 0 && policy_mix[1] >= 0 && policy_mix[2] >= 0 &&
                  policy_mix[0] + policy_mix[1] + policy_mix[2] > 0;
  if (!ok) throw Error(ErrorCode::InvalidConfig, "motion parameters out of range");
}

// ---------------------------------------------------------------------------
// Noisy A*

namespace {

// |N(0, sigma^2)| keyed by (seed, cell), via Box-Muller on two hashed uniforms.
double cell_noise(std::uint64_t seed, std::size_t index, double sigma) {
  if (sigma <= 0.0) return 0.0;
  const std::uint64_t key = derive_seed(seed, index);
  const double u1 = static_cast<double>((mix64(key) >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(mix64(key + 1) >> 11) * 0x1.0p-53;
  return std::abs(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2)) * sigma;
}

// Among minimum-step paths, prefer fewer diagonal moves. Small enough that
// step-optimality holds for any grid below 10^5 cells per side.
constexpr double kDiagonalTieBreak = 1e-6;

struct OpenEntry {
  double f;
  int h;
  std::size_t index;
  bool operator>(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (h != o.h) return h > o.h;
    return index > o.index;
  }
};

}  // namespace

std::vector<Cell> plan_noisy_astar(const GridWorld& world, Cell start, Cell goal, double sigma, std::uint64_t seed) {
  if (!world.is_free(start) || !world.is_free(goal)) {
    throw Error(ErrorCode::NoPath, "start or goal is not a free cell");
  }
  if (start == goal) return {start};

  const std::size_t n = world.cells().size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> g(n, kInf);
  std::vector<std::size_t> parent(n, n);
  std::vector<std::uint8_t> closed(n, 0);
  std::vector<double> noise(n, -1.0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;

  const std::size_t start_i = world.index(start), goal_i = world.index(goal);
  g[start_i] = 0.0;
  open.push({static_cast<double>(chebyshev(start, goal)), chebyshev(start, goal), start_i});
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    if (closed[top.index]) continue;
    closed[top.index] = 1;
    if (top.index == goal_i) break;
    const Cell c = world.cell_at(top.index);
    for (const Cell d : kActionOffsets) {
      if (d.col == 0 && d.row == 0) continue;
      const Cell nb{c.col + d.col, c.row + d.row};
      if (!world.is_free(nb)) continue;
      const std::size_t ni = world.index(nb);
      if (closed[ni]) continue;
      const double diagonal = d.col != 0 && d.row != 0 ? kDiagonalTieBreak : 0.0;
      if (noise[ni] < 0.0) noise[ni] = cell_noise(seed, ni, sigma);
      const double cand = g[top.index] + 1.0 + diagonal + noise[ni];
      if (cand < g[ni]) {
        g[ni] = cand;
        parent[ni] = top.index;
        const int h = chebyshev(nb, goal);
        open.push({cand + h, h, ni});
      }
    }
  }
  if (!closed[goal_i]) throw Error(ErrorCode::NoPath, "goal unreachable from start");

  std::vector<Cell> path;
  for (std::size_t i = goal_i; i != n; i = parent[i]) path.push_back(world.cell_at(i));
  std::reverse(path.begin(), path.end());
  return path;
}

// ---------------------------------------------------------------------------

namespace {

Vec2 course_target(const DynamicObstacle& o) {
  return o.waypoint < o.course.size() ? to_point(o.course[o.waypoint]) : o.goal;
}

bool targeting_goal(const DynamicObstacle& o) { return o.waypoint + 1 >= o.course.size(); }

void advance_waypoints(DynamicObstacle& o, const MotionConfig& config) {
  while (o.waypoint < o.course.size() &&
         distance(o.position, to_point(o.course[o.waypoint])) <= config.waypoint_tolerance) {
    ++o.waypoint;
  }
}

Vec2 clamp_speed(Vec2 v, double max_speed) {
  const double s = norm(v);
  return s > max_speed ? v * (max_speed / s) : v;
}

bool position_allowed(const GridWorld* world, Vec2 p) {
  return world == nullptr || world->is_free(nearest_cell(p));
}

// Moves by `v * h`, sliding along an axis when the full move would enter a
// blocked cell. Returns the realized displacement.
Vec2 move_constrained(DynamicObstacle& o, Vec2 v, double h, const GridWorld* world) {
  const Vec2 from = o.position;
  const Vec2 candidates[] = {from + v * h, {from.x + v.x * h, from.y}, {from.x, from.y + v.y * h}};
  for (const Vec2& c : candidates) {
    if (position_allowed(world, c)) {
      o.position = c;
      return c - from;
    }
  }
  return {};
}

// Nearest point of the blocked cell squares around p within `window` cells.
bool nearest_blocked_point(const GridWorld& world, Vec2 p, int window, Vec2& nearest, Cell& cell_out) {
  const Cell center = nearest_cell(p);
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int dr = -window; dr <= window; ++dr) {
    for (int dc = -window; dc <= window; ++dc) {
      const Cell c{center.col + dc, center.row + dr};
      if (!world.in_bounds(c) || world.at(c) == CellKind::Free) continue;
      const Vec2 q{std::clamp(p.x, c.col - 0.5, c.col + 0.5), std::clamp(p.y, c.row - 0.5, c.row + 0.5)};
      const double d = distance(p, q);
      if (d < best) {
        best = d;
        nearest = q;
        cell_out = c;
        found = true;
      }
    }
  }
  return found;
}

struct ForceSource {
  Vec2 position;
  int rank;  // orders coincident pairs
};

Vec2 social_force(const DynamicObstacle& self, int self_rank, std::span<const ForceSource> sources,
                  const GridWorld* world, const MotionConfig& config) {
  const SocialForceParams& p = config.sfm;
  Vec2 force = (preferred_velocity(self, config) - self.velocity) / p.relaxation_time;
  const double cutoff = 10.0 * p.interaction_range;
  for (const ForceSource& s : sources) {
    if (s.rank == self_rank) continue;
    if (std::abs(s.position.x - self.position.x) > cutoff || std::abs(s.position.y - self.position.y) > cutoff) {
      continue;
    }
    force += pairwise_repulsion(self.position, s.position, p.interaction_strength, p.interaction_range,
                                self_rank > s.rank);
  }
  if (world != nullptr) {
    const int window = std::max(1, static_cast<int>(std::ceil(8.0 * p.obstacle_range)));
    Vec2 q;
    Cell c;
    if (nearest_blocked_point(*world, self.position, window, q, c)) {
      const Vec2 away = self.position - q;
      const double d = norm(away);
      Vec2 n;
      if (d > 1e-12) {
        n = away / d;
      } else {
        const Vec2 from_center = self.position - to_point(c);
        const double dc = norm(from_center);
        n = dc > 1e-12 ? from_center / dc : Vec2{1.0, 0.0};
      }
      force += n * (p.obstacle_strength * std::exp(-d / p.obstacle_range));
    }
  }
  return force;
}

}  // namespace

Vec2 preferred_velocity(const DynamicObstacle& obstacle, const MotionConfig& config) {
  const Vec2 to = course_target(obstacle) - obstacle.position;
  const double dist = norm(to);
  if (dist < 1e-12) return {};
  double speed = std::min(obstacle.preferred_speed, config.max_speed);
  if (targeting_goal(obstacle)) speed = std::min(speed, dist / config.dt);
  return to * (speed / dist);
}

Vec2 pairwise_repulsion(Vec2 self, Vec2 other, double strength, double range, bool self_ranks_higher) {
  const Vec2 diff = self - other;
  const double d = norm(diff);
  const Vec2 n = d > 1e-12 ? diff / d : Vec2{self_ranks_higher ? 1.0 : -1.0, 0.0};
  return n * (strength * std::exp(-d / range));
}

namespace {

// Integrates the listed obstacles jointly; `fixed` sources stay put.
void integrate_sfm(std::vector<DynamicObstacle>& obstacles, std::span<const std::size_t> movers,
                   std::span<const ForceSource> fixed, const GridWorld* world, const MotionConfig& config) {
  if (movers.empty()) return;
  const int substeps = config.sfm.substeps;
  const double h = config.dt / substeps;
  std::vector<Vec2> start(movers.size());
  for (std::size_t k = 0; k < movers.size(); ++k) start[k] = obstacles[movers[k]].position;

  std::vector<ForceSource> sources(fixed.begin(), fixed.end());
  const std::size_t first_mover = sources.size();
  for (std::size_t i : movers) sources.push_back({obstacles[i].position, obstacles[i].id});
  std::vector<Vec2> forces(movers.size());

  for (int s = 0; s < substeps; ++s) {
    for (std::size_t k = 0; k < movers.size(); ++k) {
      forces[k] = social_force(obstacles[movers[k]], obstacles[movers[k]].id, sources, world, config);
    }
    for (std::size_t k = 0; k < movers.size(); ++k) {
      DynamicObstacle& o = obstacles[movers[k]];
      const Vec2 v = clamp_speed(o.velocity + forces[k] * h, config.max_speed);
      const Vec2 moved = move_constrained(o, v, h, world);
      o.velocity = moved / h;
      advance_waypoints(o, config);
      sources[first_mover + k].position = o.position;
    }
  }
  for (std::size_t k = 0; k < movers.size(); ++k) {
    DynamicObstacle& o = obstacles[movers[k]];
    o.velocity = (o.position - start[k]) / config.dt;
  }
}

}  // namespace

void sfm_step(std::vector<DynamicObstacle>& obstacles, const GridWorld& world, const MotionConfig& config,
              std::span<const Bystander> bystanders) {
  std::vector<std::size_t> movers(obstacles.size());
  for (std::size_t i = 0; i < movers.size(); ++i) movers[i] = i;
  std::vector<ForceSource> fixed;
  // Bystanders rank above every obstacle id.
  for (std::size_t b = 0; b < bystanders.size(); ++b) {
    fixed.push_back({bystanders[b].position, std::numeric_limits<int>::max() - static_cast<int>(b)});
  }
  integrate_sfm(obstacles, movers, fixed, &world, config);
}

// ---------------------------------------------------------------------------
// ORCA (after van den Berg et al.; two-dimensional linear program with
// fallback to the least-violating velocity).

namespace {

struct OrcaLine {
  Vec2 point;
  Vec2 direction;
};

constexpr double kOrcaEpsilon = 1e-9;

Vec2 normalize(Vec2 v) {
  const double n = norm(v);
  return n > 0.0 ? v / n : Vec2{};
}

bool linear_program1(std::span<const OrcaLine> lines, std::size_t line_no, double radius, Vec2 opt_velocity,
                     bool direction_opt, Vec2& result) {
  const OrcaLine& line = lines[line_no];
  const double dot_product = dot(line.point, line.direction);
  const double discriminant = dot_product * dot_product + radius * radius - norm_sq(line.point);
  if (discriminant < 0.0) return false;  // max speed circle misses the line
  const double sqrt_disc = std::sqrt(discriminant);
  double t_left = -dot_product - sqrt_disc;
  double t_right = -dot_product + sqrt_disc;

  for (std::size_t i = 0; i < line_no; ++i) {
    const double denominator = det(line.direction, lines[i].direction);
    const double numerator = det(lines[i].direction, line.point - lines[i].point);
    if (std::abs(denominator) <= kOrcaEpsilon) {
      if (numerator < 0.0) return false;  // parallel and infeasible
      continue;
    }
    const double t = numerator / denominator;
    if (denominator >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) return false;
  }

  if (direction_opt) {
    result = dot(opt_velocity, line.direction) > 0.0 ? line.point + t_right * line.direction
                                                     : line.point + t_left * line.direction;
  } else {
    const double t = dot(line.direction, opt_velocity - line.point);
    result = line.point + std::clamp(t, t_left, t_right) * line.direction;
  }
  return true;
}

std::size_t linear_program2(std::span<const OrcaLine> lines, double radius, Vec2 opt_velocity, bool direction_opt,
                            Vec2& result) {
  if (direction_opt) {
    result = opt_velocity * radius;
  } else if (norm_sq(opt_velocity) > radius * radius) {
    result = normalize(opt_velocity) * radius;
  } else {
    result = opt_velocity;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) > 0.0) {
      const Vec2 previous = result;
      if (!linear_program1(lines, i, radius, opt_velocity, direction_opt, result)) {
        result = previous;
        return i;
      }
    }
  }
  return lines.size();
}

void linear_program3(std::span<const OrcaLine> lines, std::size_t begin_line, double radius, Vec2& result) {
  double distance_violation = 0.0;
  std::vector<OrcaLine> projected;
  for (std::size_t i = begin_line; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) <= distance_violation) continue;
    projected.clear();
    for (std::size_t j = 0; j < i; ++j) {
      OrcaLine line;
      const double determinant = det(lines[i].direction, lines[j].direction);
      if (std::abs(determinant) <= kOrcaEpsilon) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) continue;
        line.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        line.point = lines[i].point +
                     (det(lines[j].direction, lines[i].point - lines[j].point) / determinant) * lines[i].direction;
      }
      line.direction = normalize(lines[j].direction - lines[i].direction);
      projected.push_back(line);
    }
    const Vec2 previous = result;
    if (linear_program2(projected, radius, Vec2{-lines[i].direction.y, lines[i].direction.x}, true, result) <
        projected.size()) {
      result = previous;
    }
    distance_violation = det(lines[i].direction, lines[i].point - result);
  }
}

struct OrcaNeighbor {
  Vec2 position;
  Vec2 velocity;
  double radius;
  double responsibility;
  int rank;
  double dist_sq;
};

OrcaLine orca_line(const DynamicObstacle& self, int self_rank, const OrcaNeighbor& other, const OrcaParams& params,
                   double dt) {
  const Vec2 rel_pos = other.position - self.position;
  const Vec2 rel_vel = self.velocity - other.velocity;
  const double dist_sq = norm_sq(rel_pos);
  const double combined_radius = self.radius + other.radius;
  const double combined_radius_sq = combined_radius * combined_radius;
  const double inv_horizon = 1.0 / params.time_horizon;

  OrcaLine line;
  Vec2 u;
  if (dist_sq > combined_radius_sq) {
    const Vec2 w = rel_vel - inv_horizon * rel_pos;
    const double w_length_sq = norm_sq(w);
    const double dot1 = dot(w, rel_pos);
    if (dot1 < 0.0 && dot1 * dot1 > combined_radius_sq * w_length_sq) {
      // Project on the cut-off circle.
      const double w_length = std::sqrt(w_length_sq);
      const Vec2 unit_w = w / w_length;
      line.direction = {unit_w.y, -unit_w.x};
      u = (combined_radius * inv_horizon - w_length) * unit_w;
    } else {
      // Project on a leg of the velocity obstacle cone.
      const double leg = std::sqrt(dist_sq - combined_radius_sq);
      if (det(rel_pos, w) > 0.0) {
        line.direction = Vec2{rel_pos.x * leg - rel_pos.y * combined_radius,
                              rel_pos.x * combined_radius + rel_pos.y * leg} /
                         dist_sq;
      } else {
        line.direction = -Vec2{rel_pos.x * leg + rel_pos.y * combined_radius,
                               -rel_pos.x * combined_radius + rel_pos.y * leg} /
                         dist_sq;
      }
      u = dot(rel_vel, line.direction) * line.direction - rel_vel;
    }
  } else {
    // Already overlapping: resolve within one time step.
    const double inv_dt = 1.0 / dt;
    const Vec2 w = rel_vel - inv_dt * rel_pos;
    const double w_length = norm(w);
    const Vec2 unit_w = w_length > 1e-12 ? w / w_length : Vec2{self_rank > other.rank ? -1.0 : 1.0, 0.0};
    line.direction = {unit_w.y, -unit_w.x};
    u = (combined_radius * inv_dt - w_length) * unit_w;
  }
  line.point = self.velocity + other.responsibility * u;
  return line;
}

Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Vec2 orca_velocity(const DynamicObstacle& self, int self_rank, std::vector<OrcaNeighbor>& candidates,
                   const MotionConfig& config) {
  const OrcaParams& params = config.orca;
  const double range_sq = params.neighbor_distance * params.neighbor_distance;
  std::erase_if(candidates, [&](const OrcaNeighbor& n) { return n.rank == self_rank || n.dist_sq > range_sq; });
  std::sort(candidates.begin(), candidates.end(), [](const OrcaNeighbor& a, const OrcaNeighbor& b) {
    return a.dist_sq != b.dist_sq ? a.dist_sq < b.dist_sq : a.rank < b.rank;
  });
  if (candidates.size() > static_cast<std::size_t>(params.max_neighbors)) {
    candidates.resize(static_cast<std::size_t>(params.max_neighbors));
  }
  Vec2 preferred = preferred_velocity(self, config);
  if (candidates.empty()) return preferred;

  // A small clockwise bias on the preferred heading breaks the exact
  // head-on symmetry in which reciprocal agents otherwise stall.
  preferred = rotate(preferred, -config.orca.pass_bias);
  std::vector<OrcaLine> lines;
  lines.reserve(candidates.size());
  for (const OrcaNeighbor& n : candidates) lines.push_back(orca_line(self, self_rank, n, params, config.dt));
  Vec2 result;
  const std::size_t fail = linear_program2(lines, config.max_speed, preferred, false, result);
  if (fail < lines.size()) linear_program3(lines, fail, config.max_speed, result);
  return result;
}

}  // namespace

void orca_step(std::vector<DynamicObstacle>& obstacles, const MotionConfig& config,
               std::span<const Bystander> bystanders, const GridWorld* world) {
  const std::vector<DynamicObstacle> snapshot = obstacles;
  std::vector<OrcaNeighbor> candidates;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const DynamicObstacle& self = snapshot[i];
    candidates.clear();
    for (const DynamicObstacle& o : snapshot) {
      candidates.push_back({o.position, o.velocity, o.radius, 0.5, o.id, norm_sq(o.position - self.position)});
    }
    for (std::size_t b = 0; b < bystanders.size(); ++b) {
      candidates.push_back({bystanders[b].position, bystanders[b].velocity, bystanders[b].radius, 1.0,
                            std::numeric_limits<int>::max() - static_cast<int>(b),
                            norm_sq(bystanders[b].position - self.position)});
    }
    const Vec2 v = orca_velocity(self, self.id, candidates, config);
    DynamicObstacle& o = obstacles[i];
    o.velocity = move_constrained(o, clamp_speed(v, config.max_speed), config.dt, world) / config.dt;
    advance_waypoints(o, config);
  }
}

// ---------------------------------------------------------------------------

bool at_goal(const DynamicObstacle& obstacle, const MotionConfig& config) {
  return distance(obstacle.position, obstacle.goal) <= config.goal_tolerance;
}

namespace {

MotionPolicy draw_policy(const MotionConfig& config, Rng& rng) {
  const auto& w = config.policy_mix;
  const double u = rng.uniform() * (w[0] + w[1] + w[2]);
  if (u < w[0]) return MotionPolicy::NoisyAStar;
  if (u < w[0] + w[1]) return MotionPolicy::SocialForce;
  return MotionPolicy::Orca;
}

void assign_course(DynamicObstacle& o, Cell from, Cell goal, const GridWorld& world, const MotionConfig& config,
                   Rng& rng) {
  o.policy = draw_policy(config, rng);
  o.preferred_speed = rng.uniform(config.min_preferred_speed, config.max_preferred_speed);
  const double sigma = o.policy == MotionPolicy::NoisyAStar ? config.astar_noise : 0.0;
  o.course = plan_noisy_astar(world, from, goal, sigma, rng.next_u64());
  o.waypoint = 0;
  o.goal = to_point(goal);
  if (o.policy != MotionPolicy::NoisyAStar) advance_waypoints(o, config);
}

}  // namespace

bool respawn_course(DynamicObstacle& obstacle, const GridWorld& world, const MotionConfig& config, Rng& rng) {
  if (!at_goal(obstacle, config)) return false;
  const Cell here = nearest_cell(obstacle.position);
  if (!world.is_free(here)) throw Error(ErrorCode::NoReachableGoal, "obstacle is not on a free cell");

  // Flood fill the reachable region, collecting far-enough cells in index order.
  std::vector<std::uint8_t> seen(world.cells().size(), 0);
  std::vector<Cell> stack{here};
  seen[world.index(here)] = 1;
  std::vector<std::size_t> candidates;
  const double min_d = config.min_respawn_distance;
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    if (distance(to_point(c), obstacle.position) >= min_d) candidates.push_back(world.index(c));
    for (const Cell d : kActionOffsets) {
      const Cell nb{c.col + d.col, c.row + d.row};
      if (world.is_free(nb) && !seen[world.index(nb)]) {
        seen[world.index(nb)] = 1;
        stack.push_back(nb);
      }
    }
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::NoReachableGoal, "no reachable free cell at least " + std::to_string(min_d) + " away");
  }
  std::sort(candidates.begin(), candidates.end());
  const Cell goal = world.cell_at(candidates[rng.uniform_index(candidates.size())]);
  assign_course(obstacle, here, goal, world, config, rng);
  return true;
}

DynamicObstacle spawn_obstacle(int id, Cell spawn, Cell goal, const GridWorld& world, const MotionConfig& config,
                               Rng& rng) {
  DynamicObstacle o;
  o.id = id;
  o.position = to_point(spawn);
  assign_course(o, spawn, goal, world, config, rng);
  return o;
}

void advance_obstacles(std::vector<DynamicObstacle>& obstacles, const GridWorld& world, const MotionConfig& config,
                       std::span<const Bystander> bystanders, Rng& rng) {
  const std::vector<DynamicObstacle> snapshot = obstacles;
  std::vector<std::size_t> sfm_movers;
  std::vector<ForceSource> sfm_fixed;
  std::vector<OrcaNeighbor> candidates;

  for (std::size_t b = 0; b < bystanders.size(); ++b) {
    sfm_fixed.push_back({bystanders[b].position, std::numeric_limits<int>::max() - static_cast<int>(b)});
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (snapshot[i].policy == MotionPolicy::SocialForce) {
      sfm_movers.push_back(i);
    } else {
      sfm_fixed.push_back({snapshot[i].position, snapshot[i].id});
    }
  }

  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    DynamicObstacle& o = obstacles[i];
    switch (o.policy) {
      case MotionPolicy::NoisyAStar: {
        const Vec2 from = o.position;
        if (o.waypoint < o.course.size()) {
          o.position = to_point(o.course[o.waypoint]);
          ++o.waypoint;
          // Skip the start cell so every step is a real hop.
          if (o.position == from && o.waypoint < o.course.size()) {
            o.position = to_point(o.course[o.waypoint]);
            ++o.waypoint;
          }
        }
        o.velocity = (o.position - from) / config.dt;
        break;
      }
      case MotionPolicy::Orca: {
        const DynamicObstacle& self = snapshot[i];
        candidates.clear();
        for (const DynamicObstacle& other : snapshot) {
          const double responsibility = other.policy == MotionPolicy::Orca ? 0.5 : 1.0;
          candidates.push_back({other.position, other.velocity, other.radius, responsibility, other.id,
                                norm_sq(other.position - self.position)});
        }
        for (std::size_t b = 0; b < bystanders.size(); ++b) {
          candidates.push_back({bystanders[b].position, bystanders[b].velocity, bystanders[b].radius, 1.0,
                                std::numeric_limits<int>::max() - static_cast<int>(b),
                                norm_sq(bystanders[b].position - self.position)});
        }
        const Vec2 v = orca_velocity(self, self.id, candidates, config);
        o.velocity = move_constrained(o, clamp_speed(v, config.max_speed), config.dt, &world) / config.dt;
        advance_waypoints(o, config);
        break;
      }
      case MotionPolicy::SocialForce:
        break;
    }
  }
  integrate_sfm(obstacles, sfm_movers, sfm_fixed, &world, config);

  for (DynamicObstacle& o : obstacles) {
    if (!at_goal(o, config)) continue;
    try {
      respawn_course(o, world, config, rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoReachableGoal) throw;
      // Trapped in a small pocket: park in place.
      o.course.clear();
      o.waypoint = 0;
      o.velocity = {};
    }
  }
}

// ---------------------------------------------------------------------------

void write_trajectory_header(std::ostream& out) {
  out << "# sango-trajectory v1\n" << "step,obstacle_id,x,y,policy\n";
}

void write_trajectory_rows(std::ostream& out, long step, std::span<const DynamicObstacle> obstacles) {
  out << std::setprecision(17);
  for (const DynamicObstacle& o : obstacles) {
    out << step << ',' << o.id << ',' << o.position.x << ',' << o.position.y << ',' << to_string(o.policy) << '\n';
  }
}

}  // namespace sango
