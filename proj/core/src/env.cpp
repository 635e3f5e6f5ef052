#include "sango/env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "sango/error.hpp"

namespace sango {

std::string_view to_string(EnvironmentKind kind) {
  return kind == EnvironmentKind::Cog ? "cog" : "mosang";
}

void ScenarioConfig::validate() const {
  if (kind == EnvironmentKind::Cog && grid_size < GridWorld::kMinSide) {
    throw Error(ErrorCode::DegenerateWorld, "grid_size below " + std::to_string(GridWorld::kMinSide));
  }
  if (num_static < 0 || num_dynamic < 0) throw Error(ErrorCode::InvalidConfig, "negative obstacle count");
  if (kind == EnvironmentKind::Mosang && blueprint_path.empty() && (synthetic_world < 1 || synthetic_world > 3)) {
    throw Error(ErrorCode::InvalidConfig, "synthetic_world must be 1, 2 or 3");
  }
  if (!(world_scale > 0) || !(meters_per_cell > 0)) {
    throw Error(ErrorCode::InvalidConfig, "world_scale and meters_per_cell must be positive");
  }
  if (!(agent_radius > 0) || !(obstacle_radius > 0) || min_agent_separation < 0) {
    throw Error(ErrorCode::InvalidConfig, "radii must be positive and separation non-negative");
  }
  if (observation.static_slots < 0 || observation.dynamic_slots < 0) {
    throw Error(ErrorCode::InvalidConfig, "observation slot counts must be non-negative");
  }
  dbscan.validate();
  reward.validate();
  motion.validate();
}

// ---------------------------------------------------------------------------
// Observation

namespace {

std::vector<Cell> nearest_static_cells(const GridWorld& world, Cell origin, int k) {
  struct Candidate {
    long d2;
    std::size_t index;
  };
  std::vector<Candidate> all;
  all.reserve(world.static_cells().size());
  for (const Cell c : world.static_cells()) {
    const long dc = c.col - origin.col;
    const long dr = c.row - origin.row;
    all.push_back({dc * dc + dr * dr, world.index(c)});
  }
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    [](const Candidate& a, const Candidate& b) {
                      return a.d2 != b.d2 ? a.d2 < b.d2 : a.index < b.index;
                    });
  std::vector<Cell> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(world.cell_at(all[i].index));
  return out;
}

double bearing(double dx, double dy) {
  const double a = std::atan2(dy, dx);
  return a == -std::numbers::pi ? std::numbers::pi : a;
}

}  // namespace

Observation encode_observation(const AgentState& agent, const GridWorld& world,
                               std::span<const DynamicObstacle> obstacles, const ScenarioConfig& config) {
  const double sx = world.width() - 1;
  const double sy = world.height() - 1;
  Observation obs;
  obs.reserve(config.observation_size());
  obs.push_back(agent.position.col / sx);
  obs.push_back(agent.position.row / sy);
  obs.push_back((agent.goal.col - agent.position.col) / sx);
  obs.push_back((agent.goal.row - agent.position.row) / sy);

  const int ks = config.observation.static_slots;
  const std::vector<Cell> statics = nearest_static_cells(world, agent.position, ks);
  const double scale = config.observation.static_scale;
  for (const Cell c : statics) {
    const double dx = c.col - agent.position.col, dy = c.row - agent.position.row;
    if (scale > 0.0) {
      obs.push_back(std::clamp(dx / scale, -1.0, 1.0));
      obs.push_back(std::clamp(dy / scale, -1.0, 1.0));
    } else {
      obs.push_back(dx / sx);
      obs.push_back(dy / sy);
    }
  }
  for (auto i = static_cast<int>(statics.size()); i < ks; ++i) {
    obs.push_back(0.0);
    obs.push_back(0.0);
  }

  struct Sensed {
    double d;
    int id;
    Vec2 offset;
  };
  const Vec2 p = to_point(agent.position);
  const double range = config.dbscan.sensing_range;
  std::vector<Sensed> sensed;
  for (const DynamicObstacle& o : obstacles) {
    const Vec2 offset = o.position - p;
    const double d = norm(offset);
    if (d <= range) sensed.push_back({d, o.id, offset});
  }
  std::sort(sensed.begin(), sensed.end(),
            [](const Sensed& a, const Sensed& b) { return a.d != b.d ? a.d < b.d : a.id < b.id; });
  const int kd = config.observation.dynamic_slots;
  for (int i = 0; i < kd; ++i) {
    if (static_cast<std::size_t>(i) < sensed.size()) {
      const Sensed& s = sensed[static_cast<std::size_t>(i)];
      obs.push_back(std::min(1.0, s.d / range));
      obs.push_back(bearing(s.offset.x, s.offset.y));
    } else {
      obs.push_back(1.0);
      obs.push_back(0.0);
    }
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Episode log

namespace {

constexpr std::string_view kLogMagic = "# sango-episode-log v1";

std::string_view blocked_name(CellKind kind) {
  switch (kind) {
    case CellKind::Free: return "none";
    case CellKind::Boundary: return "boundary";
    case CellKind::StaticObstacle: return "static";
  }
  return "none";
}

std::string log_columns() {
  std::string cols = "step,agent_x,agent_y,action,blocked_by";
  for (std::size_t t = 0; t < kNumRewardTerms; ++t) {
    cols += ",r_";
    cols += term_name(static_cast<RewardTerm>(t));
  }
  cols +=
      ",reward_total,nearest_dynamic,nearest_group_boundary,nearest_group_core,nearest_wall,group_intrusion,"
      "cluster_count,terminal,done";
  return cols;
}

[[noreturn]] void parse_fail(long line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "episode log line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_csv(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    out.push_back(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

long parse_long(std::string_view s, long line) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) parse_fail(line, "bad integer '" + std::string(s) + "'");
  return v;
}

double parse_double(std::string_view s, long line) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) parse_fail(line, "bad number '" + std::string(s) + "'");
  return v;
}

bool parse_flag(std::string_view s, long line) {
  if (s == "0") return false;
  if (s == "1") return true;
  parse_fail(line, "bad flag '" + std::string(s) + "'");
}

Cell parse_cell(std::string_view s, long line) {
  const std::size_t comma = s.find(',');
  if (comma == std::string_view::npos) parse_fail(line, "bad cell '" + std::string(s) + "'");
  return {static_cast<int>(parse_long(s.substr(0, comma), line)),
          static_cast<int>(parse_long(s.substr(comma + 1), line))};
}

}  // namespace

void write_episode_log(std::ostream& out, const EpisodeLog& log) {
  std::ostringstream os;
  os.precision(17);
  os << kLogMagic << '\n';
  os << "# start=" << log.start.col << ',' << log.start.row << " goal=" << log.goal.col << ',' << log.goal.row
     << " grouping=" << (log.grouping_enabled ? 1 : 0) << '\n';
  os << log_columns() << '\n';
  for (const StepRecord& s : log.steps) {
    os << s.step << ',' << s.agent.col << ',' << s.agent.row << ',' << s.action << ',' << blocked_name(s.blocked_by);
    for (double t : s.reward.terms) os << ',' << t;
    os << ',' << s.reward.total << ',' << s.proximity.dynamic << ',' << s.proximity.group_boundary << ','
       << s.proximity.group_core << ',' << s.proximity.wall << ',' << (s.group_intrusion ? 1 : 0) << ','
       << s.cluster_count << ',' << to_string(s.reward.terminal) << ',' << (s.done ? 1 : 0) << '\n';
  }
  out << os.str();
}

EpisodeLog read_episode_log(std::istream& in) {
  EpisodeLog log;
  std::string line;
  long line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next() || line != kLogMagic) parse_fail(1, "missing '" + std::string(kLogMagic) + "' header");
  if (!next() || !line.starts_with("# ")) parse_fail(line_no, "missing episode metadata");
  {
    std::istringstream meta(line.substr(2));
    std::string field;
    bool have_start = false, have_goal = false, have_grouping = false;
    while (meta >> field) {
      const std::size_t eq = field.find('=');
      if (eq == std::string::npos) parse_fail(line_no, "bad metadata field '" + field + "'");
      const std::string key = field.substr(0, eq);
      const std::string_view value = std::string_view(field).substr(eq + 1);
      if (key == "start") {
        log.start = parse_cell(value, line_no);
        have_start = true;
      } else if (key == "goal") {
        log.goal = parse_cell(value, line_no);
        have_goal = true;
      } else if (key == "grouping") {
        log.grouping_enabled = parse_flag(value, line_no);
        have_grouping = true;
      } else {
        parse_fail(line_no, "unknown metadata key '" + key + "'");
      }
    }
    if (!have_start || !have_goal || !have_grouping) parse_fail(line_no, "incomplete metadata");
  }
  if (!next() || line != log_columns()) parse_fail(line_no, "unexpected column header");

  const std::size_t expected = 5 + kNumRewardTerms + 9;
  while (next()) {
    if (line.empty()) continue;
    const std::vector<std::string_view> f = split_csv(line);
    if (f.size() != expected) {
      parse_fail(line_no, "expected " + std::to_string(expected) + " fields, got " + std::to_string(f.size()));
    }
    StepRecord s;
    std::size_t i = 0;
    s.step = parse_long(f[i++], line_no);
    s.agent.col = static_cast<int>(parse_long(f[i++], line_no));
    s.agent.row = static_cast<int>(parse_long(f[i++], line_no));
    s.action = static_cast<int>(parse_long(f[i++], line_no));
    const std::string_view blocked = f[i++];
    if (blocked == "none") {
      s.blocked_by = CellKind::Free;
    } else if (blocked == "boundary") {
      s.blocked_by = CellKind::Boundary;
    } else if (blocked == "static") {
      s.blocked_by = CellKind::StaticObstacle;
    } else {
      parse_fail(line_no, "bad blocked_by '" + std::string(blocked) + "'");
    }
    for (double& t : s.reward.terms) t = parse_double(f[i++], line_no);
    s.reward.total = parse_double(f[i++], line_no);
    s.proximity.dynamic = parse_double(f[i++], line_no);
    s.proximity.group_boundary = parse_double(f[i++], line_no);
    s.proximity.group_core = parse_double(f[i++], line_no);
    s.proximity.wall = parse_double(f[i++], line_no);
    s.group_intrusion = parse_flag(f[i++], line_no);
    s.cluster_count = static_cast<int>(parse_long(f[i++], line_no));
    const std::string_view terminal = f[i++];
    if (terminal == "none") {
      s.reward.terminal = Terminal::None;
    } else if (terminal == "goal") {
      s.reward.terminal = Terminal::Goal;
    } else if (terminal == "timeout") {
      s.reward.terminal = Terminal::Timeout;
    } else {
      parse_fail(line_no, "bad terminal '" + std::string(terminal) + "'");
    }
    s.done = parse_flag(f[i++], line_no);
    log.steps.push_back(s);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Environment

namespace {

GridWorld build_blueprint_world(const ScenarioConfig& config) {
  GrayImage image =
      config.blueprint_path.empty() ? synthetic_blueprint(config.synthetic_world) : read_image(config.blueprint_path);
  if (config.world_scale != 1.0) image = scale_image(image, config.world_scale);
  return load_blueprint(image, config.blueprint, config.meters_per_cell);
}

}  // namespace

NavigationEnv::NavigationEnv(ScenarioConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.kind == EnvironmentKind::Mosang) blueprint_world_ = build_blueprint_world(config_);
}

void NavigationEnv::set_trace(std::ostream* trajectories, std::ostream* clusters) {
  trajectory_out_ = trajectories;
  cluster_out_ = clusters;
  if (trajectory_out_ != nullptr) write_trajectory_header(*trajectory_out_);
  if (cluster_out_ != nullptr) write_cluster_header(*cluster_out_);
}

void NavigationEnv::place_mosang(Rng& rng) {
  const GridWorld& world = *world_;
  const std::vector<int> component = label_free_components(world);
  std::vector<std::size_t> free_cells;
  for (std::size_t i = 0; i < world.cells().size(); ++i) {
    if (world.cells()[i] == CellKind::Free) free_cells.push_back(i);
  }
  std::vector<std::uint8_t> used(world.cells().size(), 0);
  auto place_pair = [&](double min_separation) -> std::optional<std::pair<Cell, Cell>> {
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      const std::size_t from = free_cells[rng.uniform_index(free_cells.size())];
      const std::size_t to = free_cells[rng.uniform_index(free_cells.size())];
      if (from == to || used[from] || used[to] || component[from] != component[to] ||
          distance(to_point(world.cell_at(from)), to_point(world.cell_at(to))) < min_separation) {
        continue;
      }
      return std::pair{world.cell_at(from), world.cell_at(to)};
    }
    return std::nullopt;
  };

  const auto agent = place_pair(config_.min_agent_separation);
  if (!agent) throw Error(ErrorCode::NoAgentPath, "no connected agent start and goal");
  agent_ = {agent->first, agent->second};
  used[world.index(agent->first)] = 1;
  used[world.index(agent->second)] = 1;

  for (int i = 0; i < config_.num_dynamic; ++i) {
    const auto route = place_pair(0.0);
    if (!route) throw Error(ErrorCode::PlacementOverflow, "rejection sampling exhausted placing dynamic route");
    used[world.index(route->first)] = 1;
    obstacles_.push_back(spawn_obstacle(i, route->first, route->second, world, config_.motion, motion_rng_));
  }
}

Observation NavigationEnv::reset(std::uint64_t seed) {
  obstacles_.clear();
  memory_ = GroupMemory{};
  motion_rng_ = Rng(derive_seed(seed, 2));
  step_ = 0;
  done_ = false;

  if (config_.kind == EnvironmentKind::Cog) {
    CogLayout layout = generate_cog(config_.grid_size, config_.num_static, config_.num_dynamic, derive_seed(seed, 1),
                                    config_.min_agent_separation);
    world_ = std::move(layout.world);
    agent_ = {layout.agent_start, layout.agent_goal};
    for (std::size_t i = 0; i < layout.dynamic_routes.size(); ++i) {
      obstacles_.push_back(spawn_obstacle(static_cast<int>(i), layout.dynamic_routes[i].first,
                                          layout.dynamic_routes[i].second, *world_, config_.motion, motion_rng_));
    }
  } else {
    world_ = *blueprint_world_;
    Rng placement(derive_seed(seed, 1));
    place_mosang(placement);
  }
  for (DynamicObstacle& o : obstacles_) o.radius = config_.obstacle_radius;

  log_ = EpisodeLog{agent_.position, agent_.goal, config_.grouping_enabled, {}};
  if (trajectory_out_ != nullptr) write_trajectory_rows(*trajectory_out_, 0, obstacles_);
  return encode_observation(agent_, *world_, obstacles_, config_);
}

StepResult NavigationEnv::step(int action) {
  if (done_) throw Error(ErrorCode::EpisodeFinished, "step after the episode finished");
  const Cell prev = agent_.position;
  const MoveOutcome move = apply_action(*world_, agent_, action);
  agent_.position = move.position;
  const Vec2 p = to_point(agent_.position);

  const Bystander robot{p, (p - to_point(prev)) / config_.motion.dt, config_.agent_radius};
  advance_obstacles(obstacles_, *world_, config_.motion, std::span<const Bystander>(&robot, 1), motion_rng_);
  ++step_;

  GroupSnapshot snapshot = sense_and_group(p, obstacles_, config_.dbscan, step_);
  memory_.update(snapshot, step_, config_.dbscan);

  const Proximity proximity = measure_proximity(p, *world_, obstacles_, snapshot.clusters);
  Proximity rewarded = proximity;
  if (!config_.grouping_enabled) {
    rewarded.group_boundary = Proximity::kNone;
    rewarded.group_core = Proximity::kNone;
  }
  const RewardContext ctx{to_point(prev), p, to_point(agent_.goal), move.blocked_by, step_};

  StepResult result;
  result.reward = compute_reward(ctx, rewarded, config_.reward);
  result.observation = encode_observation(agent_, *world_, obstacles_, config_);
  result.done = result.reward.terminal != Terminal::None;
  done_ = result.done;

  result.info.step = step_;
  result.info.blocked = move.blocked;
  result.info.dynamic_collision = proximity.dynamic < config_.reward.collision_tolerance;
  result.info.static_collision = move.blocked_by == CellKind::StaticObstacle;
  result.info.boundary_collision = move.blocked_by == CellKind::Boundary;

  StepRecord record;
  record.step = step_;
  record.agent = agent_.position;
  record.action = action;
  record.blocked_by = move.blocked_by;
  record.reward = result.reward;
  record.proximity = proximity;
  record.group_intrusion = proximity.group_core <= config_.dbscan.eps;
  record.cluster_count = static_cast<int>(snapshot.clusters.size());
  record.done = result.done;
  log_.steps.push_back(record);

  if (trajectory_out_ != nullptr) write_trajectory_rows(*trajectory_out_, step_, obstacles_);
  if (cluster_out_ != nullptr) {
    std::vector<Cluster> current;
    for (const Cluster& c : memory_.active_clusters()) {
      if (c.last_seen == step_) current.push_back(c);
    }
    write_cluster_rows(*cluster_out_, step_, current, memory_.noise_ids());
  }
  result.info.clusters = std::move(snapshot);
  return result;
}

}  // namespace sango
