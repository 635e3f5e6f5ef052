#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "sango/error.hpp"
#include "sango/learn.hpp"
#include "sango/metrics.hpp"
#include "sango/render.hpp"

namespace fs = std::filesystem;

namespace sango::cli {

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  body(out);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

std::string episode_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "episode_%03zu", i);
  return buf;
}

std::vector<std::uint64_t> episode_seeds(const EvalOptions& o) {
  if (!o.seeds.empty()) return o.seeds;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < o.episodes; ++i) seeds.push_back(eval_episode_seed(o.seed, i));
  return seeds;
}

PolicyParams load_policy(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::InvalidConfig, "no checkpoint given");
  return load_checkpoint(path).params;
}

std::string column_label(const ScenarioConfig& s) {
  return s.name + (s.grouping_enabled ? " grouping" : " no-grouping");
}

// Per-episode logs and worlds, plus traces for the first `traces` episodes.
void write_episode_artifacts(const fs::path& dir, const ScenarioConfig& scenario, const PolicyParams& policy,
                             const std::vector<std::uint64_t>& seeds, const EvalResult& result, int traces) {
  ensure_dir(dir);
  NavigationEnv env(scenario);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string stem = episode_stem(i);
    write_file(dir / (stem + ".csv"), [&](std::ostream& o) { write_episode_log(o, result.logs[i]); });
    if (static_cast<int>(i) < traces) {
      std::ofstream traj(dir / (stem + ".trajectory.csv"));
      std::ofstream clus(dir / (stem + ".clusters.csv"));
      if (!traj || !clus) throw Error(ErrorCode::IoError, "cannot write traces in '" + dir.string() + "'");
      env.set_trace(&traj, &clus);
      run_episode(env, seeds[i], &policy, ActionSelection::Greedy);
      env.set_trace(nullptr, nullptr);
      if (!traj.flush() || !clus.flush()) throw Error(ErrorCode::IoError, "trace write failed in '" + dir.string() + "'");
    } else {
      env.reset(seeds[i]);
    }
    write_file(dir / (stem + ".world"), [&](std::ostream& o) { write_world(o, env.world()); });
  }
}

}  // namespace

void cmd_train(const ExperimentManifest& manifest, std::ostream& progress) {
  manifest.validate();
  const fs::path out = manifest.output_dir;
  ensure_dir(out / "checkpoints");
  write_file(out / "manifest.cfg", [&](std::ostream& o) { write_manifest(o, manifest); });

  progress << "training " << manifest.scenario.name << " for " << manifest.train.total_steps << " steps, seed "
           << manifest.train.seed << '\n';
  const TrainResult result = train(manifest.scenario, manifest.train, [&](const CurveRow& row) {
    progress << "update " << row.update << " steps " << row.env_steps << " episodes " << row.episodes
             << " mean_reward " << std::fixed << std::setprecision(2) << row.mean_reward << " discomfort "
             << std::setprecision(3) << row.mean_discomfort << std::defaultfloat << '\n';
  });

  write_file(out / "curve.csv", [&](std::ostream& o) {
    write_curve_header(o);
    for (const CurveRow& row : result.curve) write_curve_row(o, row);
  });
  const std::uint64_t hash = config_hash(manifest);
  for (const Checkpoint& c : result.checkpoints) {
    char name[48];
    std::snprintf(name, sizeof name, "step_%010ld.ckpt", c.env_steps);
    save_checkpoint((out / "checkpoints" / name).string(), c.params, hash);
  }
  save_checkpoint((out / "policy.ckpt").string(), result.params, hash);
  progress << "wrote " << result.checkpoints.size() << " checkpoints and " << result.curve.size()
           << " curve rows to " << out.string() << '\n';
}

void cmd_eval(const ExperimentManifest& manifest, std::ostream& out, int trace_episodes) {
  manifest.validate();
  const PolicyParams policy = load_policy(manifest.checkpoint);
  EvalOptions options = manifest.eval_options();
  options.keep_logs = true;
  const EvalResult result = evaluate(manifest.scenario, &policy, options);

  const fs::path dir = manifest.output_dir;
  ensure_dir(dir);
  const std::vector<TableColumn> columns{{column_label(manifest.scenario), result.summary}};
  const MetricsConfig metrics;
  const std::string table = render_table(columns, metrics);
  write_file(dir / "eval_table.txt", [&](std::ostream& o) { o << table; });
  write_file(dir / "eval_table.csv", [&](std::ostream& o) { write_table_csv(o, columns, metrics); });
  write_file(dir / "episodes.csv", [&](std::ostream& o) { write_episode_metrics_csv(o, result.episodes); });
  write_episode_artifacts(dir / "logs", manifest.scenario, policy, episode_seeds(options), result, trace_episodes);
  out << table;
}

void cmd_ablate(const ExperimentManifest& manifest, const AblationArms& arms, std::ostream& out) {
  manifest.validate();
  const fs::path dir = manifest.output_dir;
  std::string with_path = arms.with_grouping;
  std::string without_path = arms.without_grouping;
  if (arms.train_both) {
    for (const bool grouping : {true, false}) {
      ExperimentManifest arm = manifest;
      arm.scenario.grouping_enabled = grouping;
      arm.output_dir = (dir / (grouping ? "with_grouping" : "without_grouping")).string();
      cmd_train(arm, out);
      (grouping ? with_path : without_path) = (fs::path(arm.output_dir) / "policy.ckpt").string();
    }
  }
  if (with_path.empty()) throw Error(ErrorCode::MissingArm, "no checkpoint for the grouping arm");
  if (without_path.empty()) throw Error(ErrorCode::MissingArm, "no checkpoint for the no-grouping arm");

  const PolicyParams with_policy = load_policy(with_path);
  const PolicyParams without_policy = load_policy(without_path);
  ScenarioConfig with_scenario = manifest.scenario;
  with_scenario.grouping_enabled = true;
  ScenarioConfig without_scenario = manifest.scenario;
  without_scenario.grouping_enabled = false;
  const EvalOptions options = manifest.eval_options();
  const EvalResult without = evaluate(without_scenario, &without_policy, options);
  const EvalResult with = evaluate(with_scenario, &with_policy, options);

  ensure_dir(dir);
  const std::vector<TableColumn> columns{{column_label(without_scenario), without.summary},
                                         {column_label(with_scenario), with.summary}};
  const MetricsConfig metrics;
  const std::string table = render_table(columns, metrics, true);
  write_file(dir / "ablation_table.txt", [&](std::ostream& o) { o << table; });
  write_file(dir / "ablation_table.csv", [&](std::ostream& o) { write_table_csv(o, columns, metrics, true); });
  write_file(dir / "episodes_without_grouping.csv",
             [&](std::ostream& o) { write_episode_metrics_csv(o, without.episodes); });
  write_file(dir / "episodes_with_grouping.csv", [&](std::ostream& o) { write_episode_metrics_csv(o, with.episodes); });

  auto column = [](const EvalResult& r, double EpisodeMetrics::*field) {
    std::vector<double> v;
    for (const EpisodeMetrics& e : r.episodes) v.push_back(e.*field);
    return v;
  };
  const SignTest discomfort = paired_sign_test(column(with, &EpisodeMetrics::discomfort_score),
                                               column(without, &EpisodeMetrics::discomfort_score));
  const SignTest collisions = paired_sign_test(column(with, &EpisodeMetrics::dynamic_collision_rate),
                                               column(without, &EpisodeMetrics::dynamic_collision_rate));
  std::ostringstream stats;
  stats << "# sango-ablation-stats v1\n";
  stats << "metric,wins,losses,ties,p_value\n";
  stats << "discomfort_score," << discomfort.wins << ',' << discomfort.losses << ',' << discomfort.ties << ','
        << std::setprecision(6) << discomfort.p_value << '\n';
  stats << "dynamic_collision_rate," << collisions.wins << ',' << collisions.losses << ',' << collisions.ties << ','
        << collisions.p_value << '\n';
  write_file(dir / "ablation_stats.txt", [&](std::ostream& o) { o << stats.str(); });
  out << table << stats.str();
}

std::vector<std::string> cmd_replay(const ReplayRequest& request) {
  std::ifstream log_in(request.log);
  if (!log_in) throw Error(ErrorCode::IoError, "cannot read log '" + request.log + "'");
  const EpisodeLog log = read_episode_log(log_in);
  const GridWorld world = load_world(request.world);
  std::vector<TrajectoryRow> tracks;
  std::vector<ClusterRow> clusters;
  if (!request.trajectories.empty()) {
    std::ifstream in(request.trajectories);
    if (!in) throw Error(ErrorCode::IoError, "cannot read '" + request.trajectories + "'");
    tracks = read_trajectory_csv(in);
  }
  if (!request.clusters.empty()) {
    std::ifstream in(request.clusters);
    if (!in) throw Error(ErrorCode::IoError, "cannot read '" + request.clusters + "'");
    clusters = read_cluster_csv(in);
  }

  const long last = log.steps.empty() ? 0 : log.steps.back().step;
  const int frames = std::max(1, request.frames);
  std::vector<long> steps;
  for (int i = 0; i < frames; ++i) {
    steps.push_back(frames == 1 ? last : (last * i + (frames - 1) / 2) / (frames - 1));
  }
  steps.push_back(last);
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());

  ensure_dir(request.out_dir);
  RenderOptions options;
  options.cell_pixels = request.cell_pixels;
  std::vector<std::string> written;
  for (const long step : steps) {
    char name[48];
    std::snprintf(name, sizeof name, "replay_step_%05ld.png", step);
    const std::string path = (fs::path(request.out_dir) / name).string();
    write_png(path, render_replay(world, log, tracks, clusters, step, options));
    written.push_back(path);
  }
  return written;
}

void cmd_import_blueprint(const ImportRequest& request, std::ostream& out) {
  const GridWorld world = load_blueprint(read_image(request.image), request.params, request.meters_per_cell);
  save_world(request.output, world);
  long free = 0, statics = 0, boundary = 0;
  for (const CellKind k : world.cells()) {
    free += k == CellKind::Free;
    statics += k == CellKind::StaticObstacle;
    boundary += k == CellKind::Boundary;
  }
  out << world.width() << 'x' << world.height() << " cells: free " << free << ", static " << statics
      << ", boundary " << boundary << '\n';
}

}  // namespace sango::cli
