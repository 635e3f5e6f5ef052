#include "sango/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "sango/error.hpp"

namespace sango {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidConfig, "bad value '" + std::string(value) + "' for " + std::string(key));
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto comma = s.find(',');
    parts.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return parts;
}

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(std::string_view)> set;
};

class Registry {
 public:
  void add(std::string key, int& ref) {
    fields_.push_back({key, [&ref] { return std::to_string(ref); },
                       [&ref, key](std::string_view v) { ref = parse_number<int>(key, v); }});
  }
  void add(std::string key, long& ref) {
    fields_.push_back({key, [&ref] { return std::to_string(ref); },
                       [&ref, key](std::string_view v) { ref = parse_number<long>(key, v); }});
  }
  void add(std::string key, std::uint64_t& ref) {
    fields_.push_back({key, [&ref] { return std::to_string(ref); },
                       [&ref, key](std::string_view v) { ref = parse_number<std::uint64_t>(key, v); }});
  }
  void add(std::string key, double& ref) {
    fields_.push_back({key, [&ref] { return format_double(ref); },
                       [&ref, key](std::string_view v) { ref = parse_number<double>(key, v); }});
  }
  void add(std::string key, bool& ref) {
    fields_.push_back({key, [&ref] { return std::string(ref ? "true" : "false"); },
                       [&ref, key](std::string_view v) {
                         if (v == "true" || v == "1") {
                           ref = true;
                         } else if (v == "false" || v == "0") {
                           ref = false;
                         } else {
                           bad_value(key, v);
                         }
                       }});
  }
  void add(std::string key, std::string& ref) {
    fields_.push_back({key, [&ref] { return ref; }, [&ref](std::string_view v) { ref = std::string(v); }});
  }
  void add(std::string key, EnvironmentKind& ref) {
    fields_.push_back({key, [&ref] { return std::string(to_string(ref)); },
                       [&ref, key](std::string_view v) {
                         if (v == "cog") {
                           ref = EnvironmentKind::Cog;
                         } else if (v == "mosang") {
                           ref = EnvironmentKind::Mosang;
                         } else {
                           bad_value(key, v);
                         }
                       }});
  }
  void add(std::string key, std::array<double, 3>& ref) {
    fields_.push_back({key,
                       [&ref] { return format_double(ref[0]) + "," + format_double(ref[1]) + "," + format_double(ref[2]); },
                       [&ref, key](std::string_view v) {
                         const auto parts = split_commas(v);
                         if (parts.size() != 3) bad_value(key, v);
                         for (std::size_t i = 0; i < 3; ++i) ref[i] = parse_number<double>(key, parts[i]);
                       }});
  }
  void add(std::string key, std::vector<std::uint64_t>& ref) {
    fields_.push_back({key,
                       [&ref] {
                         std::string s;
                         for (std::size_t i = 0; i < ref.size(); ++i) s += (i ? "," : "") + std::to_string(ref[i]);
                         return s;
                       },
                       [&ref, key](std::string_view v) {
                         ref.clear();
                         if (v.empty()) return;
                         for (std::string_view p : split_commas(v)) ref.push_back(parse_number<std::uint64_t>(key, p));
                       }});
  }

  std::vector<Field>& fields() { return fields_; }

 private:
  std::vector<Field> fields_;
};

Registry registry(ExperimentManifest& m) {
  Registry r;
  ScenarioConfig& s = m.scenario;
  r.add("scenario.name", s.name);
  r.add("scenario.kind", s.kind);
  r.add("scenario.grid_size", s.grid_size);
  r.add("scenario.num_static", s.num_static);
  r.add("scenario.num_dynamic", s.num_dynamic);
  r.add("scenario.blueprint_path", s.blueprint_path);
  r.add("scenario.synthetic_world", s.synthetic_world);
  r.add("scenario.blueprint.pixel_threshold", s.blueprint.pixel_threshold);
  r.add("scenario.blueprint.dilation_radius", s.blueprint.dilation_radius);
  r.add("scenario.blueprint.min_component_area", s.blueprint.min_component_area);
  r.add("scenario.world_scale", s.world_scale);
  r.add("scenario.meters_per_cell", s.meters_per_cell);
  r.add("scenario.min_agent_separation", s.min_agent_separation);
  r.add("scenario.agent_radius", s.agent_radius);
  r.add("scenario.obstacle_radius", s.obstacle_radius);
  r.add("scenario.grouping_enabled", s.grouping_enabled);

  r.add("observation.static_slots", s.observation.static_slots);
  r.add("observation.dynamic_slots", s.observation.dynamic_slots);
  r.add("observation.static_scale", s.observation.static_scale);

  r.add("dbscan.eps", s.dbscan.eps);
  r.add("dbscan.min_pts", s.dbscan.min_pts);
  r.add("dbscan.sensing_range", s.dbscan.sensing_range);
  r.add("dbscan.memory_expiry", s.dbscan.memory_expiry);

  RewardParams& rw = s.reward;
  r.add("reward.eta_boundary", rw.eta_boundary);
  r.add("reward.eta_dynamic", rw.eta_dynamic);
  r.add("reward.eta_group", rw.eta_group);
  r.add("reward.progress_scale", rw.progress_scale);
  r.add("reward.horizon", rw.horizon);
  r.add("reward.collision_tolerance", rw.collision_tolerance);
  r.add("reward.dynamic_collision", rw.dynamic_collision);
  r.add("reward.static_collision", rw.static_collision);
  r.add("reward.boundary_collision", rw.boundary_collision);
  r.add("reward.core_intrusion", rw.core_intrusion);
  r.add("reward.boundary_proximity", rw.boundary_proximity);
  r.add("reward.timeout", rw.timeout);
  r.add("reward.goal", rw.goal);
  r.add("reward.live", rw.live);

  MotionConfig& mo = s.motion;
  r.add("motion.sfm.relaxation_time", mo.sfm.relaxation_time);
  r.add("motion.sfm.interaction_strength", mo.sfm.interaction_strength);
  r.add("motion.sfm.interaction_range", mo.sfm.interaction_range);
  r.add("motion.sfm.obstacle_strength", mo.sfm.obstacle_strength);
  r.add("motion.sfm.obstacle_range", mo.sfm.obstacle_range);
  r.add("motion.sfm.substeps", mo.sfm.substeps);
  r.add("motion.orca.time_horizon", mo.orca.time_horizon);
  r.add("motion.orca.neighbor_distance", mo.orca.neighbor_distance);
  r.add("motion.orca.max_neighbors", mo.orca.max_neighbors);
  r.add("motion.orca.pass_bias", mo.orca.pass_bias);
  r.add("motion.astar_noise", mo.astar_noise);
  r.add("motion.dt", mo.dt);
  r.add("motion.max_speed", mo.max_speed);
  r.add("motion.min_preferred_speed", mo.min_preferred_speed);
  r.add("motion.max_preferred_speed", mo.max_preferred_speed);
  r.add("motion.policy_mix", mo.policy_mix);
  r.add("motion.goal_tolerance", mo.goal_tolerance);
  r.add("motion.waypoint_tolerance", mo.waypoint_tolerance);
  r.add("motion.min_respawn_distance", mo.min_respawn_distance);

  TrainConfig& t = m.train;
  r.add("train.learning_rate", t.learning_rate);
  r.add("train.gamma", t.gamma);
  r.add("train.gae_lambda", t.gae_lambda);
  r.add("train.clip_ratio", t.clip_ratio);
  r.add("train.rollout_length", t.rollout_length);
  r.add("train.minibatch_size", t.minibatch_size);
  r.add("train.epochs_per_update", t.epochs_per_update);
  r.add("train.entropy_coef", t.entropy_coef);
  r.add("train.value_coef", t.value_coef);
  r.add("train.max_grad_norm", t.max_grad_norm);
  r.add("train.reward_scale", t.reward_scale);
  r.add("train.adam_epsilon", t.adam_epsilon);
  r.add("train.hidden_size", t.hidden_size);
  r.add("train.total_steps", t.total_steps);
  r.add("train.eval_interval", t.eval_interval);
  r.add("train.seed", t.seed);

  r.add("output", m.output_dir);
  r.add("checkpoint", m.checkpoint);
  r.add("eval.episodes", m.eval_episodes);
  r.add("eval.seed", m.eval_seed);
  r.add("eval.seeds", m.eval_seeds);
  r.add("eval.threads", m.eval_threads);

  std::sort(r.fields().begin(), r.fields().end(), [](const Field& a, const Field& b) { return a.key < b.key; });
  return r;
}

bool hashed_key(std::string_view key) {
  return !(key == "output" || key == "checkpoint" || key.starts_with("eval."));
}

}  // namespace

void ExperimentManifest::validate() const {
  scenario.validate();
  train.validate();
  if (eval_episodes < 1) throw Error(ErrorCode::InvalidConfig, "eval.episodes must be at least 1");
  if (eval_threads < 1) throw Error(ErrorCode::InvalidConfig, "eval.threads must be at least 1");
  if (output_dir.empty()) throw Error(ErrorCode::InvalidConfig, "output directory is empty");
}

EvalOptions ExperimentManifest::eval_options() const {
  EvalOptions o;
  o.episodes = eval_episodes;
  o.seed = eval_seed;
  o.seeds = eval_seeds;
  o.threads = eval_threads;
  return o;
}

void set_manifest_value(ExperimentManifest& manifest, std::string_view key, std::string_view value) {
  if (key == "scenario") {
    manifest.scenario = scenario_preset(value);
    return;
  }
  Registry r = registry(manifest);
  for (Field& f : r.fields()) {
    if (f.key == key) {
      f.set(value);
      return;
    }
  }
  throw Error(ErrorCode::InvalidConfig, "unknown key '" + std::string(key) + "'");
}

ExperimentManifest parse_manifest(std::istream& in) {
  struct Entry {
    int line;
    std::string key;
    std::string value;
  };
  std::vector<Entry> entries;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "manifest line " + std::to_string(line_no) + ": expected key = value");
    }
    entries.push_back({line_no, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1)))});
  }

  ExperimentManifest m;
  auto apply = [&m](const Entry& e) {
    try {
      set_manifest_value(m, e.key, e.value);
    } catch (const Error& err) {
      throw Error(ErrorCode::ParseError, "manifest line " + std::to_string(e.line) + ": " + err.what());
    }
  };
  for (const Entry& e : entries) {
    if (e.key == "scenario") apply(e);
  }
  for (const Entry& e : entries) {
    if (e.key != "scenario") apply(e);
  }
  return m;
}

ExperimentManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config '" + path + "'");
  return parse_manifest(in);
}

std::string canonical_text(const ExperimentManifest& manifest) {
  ExperimentManifest copy = manifest;
  Registry r = registry(copy);
  std::string out;
  for (const Field& f : r.fields()) out += f.key + " = " + f.get() + "\n";
  return out;
}

void write_manifest(std::ostream& out, const ExperimentManifest& manifest) {
  out << "# sango-manifest v1\n" << canonical_text(manifest);
}

std::uint64_t config_hash(const ExperimentManifest& manifest) {
  ExperimentManifest copy = manifest;
  Registry r = registry(copy);
  std::string text;
  for (const Field& f : r.fields()) {
    if (hashed_key(f.key)) text += f.key + "=" + f.get() + "\n";
  }
  return fnv1a64(text);
}

}  // namespace sango
