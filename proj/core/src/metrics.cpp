#include "sango/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>

#include "sango/error.hpp"

namespace sango {

namespace {

double depth(double d, double threshold) { return std::max(0.0, (threshold - d) / threshold); }

// Incremental mean; exact for a batch of identical values.
class RunningMean {
 public:
  void add(double x) {
    ++n_;
    mean_ += (x - mean_) / static_cast<double>(n_);
  }
  std::size_t count() const { return n_; }
  double value() const { return mean_; }
  std::optional<double> optional() const { return n_ == 0 ? std::nullopt : std::optional<double>(mean_); }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
};

}  // namespace

EpisodeMetrics score_episode(const EpisodeLog& log, const RewardParams& params, const MetricsConfig& config) {
  if (!log.complete()) throw Error(ErrorCode::IncompleteLog, "episode log does not end in a terminal step");
  EpisodeMetrics m;
  const auto length = static_cast<long>(log.steps.size());
  m.path_length = length;

  double intrusion_sum = 0.0;
  long crossings = 0;
  double previous_intrusion = 0.0;
  long dynamic_hits = 0, wall_hits = 0, any_hits = 0, intrusions = 0;
  RunningMean human_distance;
  Cell previous = log.start;

  for (const StepRecord& s : log.steps) {
    const Proximity& p = s.proximity;
    const double intrusion = config.weights[0] * depth(p.dynamic, params.eta_dynamic) +
                             config.weights[1] * depth(p.group_boundary, params.eta_group) +
                             config.weights[2] * depth(p.group_core, params.eta_group);
    intrusion_sum += intrusion;
    if (previous_intrusion == 0.0 && intrusion > 0.0) ++crossings;
    previous_intrusion = intrusion;

    const bool dynamic_hit = p.dynamic < params.collision_tolerance;
    const bool wall_hit = s.blocked_by != CellKind::Free;
    dynamic_hits += dynamic_hit;
    wall_hits += wall_hit;
    if (dynamic_hit || wall_hit) {
      ++any_hits;
      if (!m.min_time_to_collision) m.min_time_to_collision = s.step;
    }
    intrusions += s.group_intrusion;
    if (std::isfinite(p.dynamic)) human_distance.add(p.dynamic);
    if (s.agent == previous) ++m.stalled_time;
    previous = s.agent;
    m.total_reward += s.reward.total;
  }

  const auto rate = [length](long count) { return static_cast<double>(count) / static_cast<double>(length); };
  m.discomfort_score = 0.5 * (intrusion_sum + static_cast<double>(crossings));
  if (log.grouping_enabled) m.group_intrusion_rate = rate(intrusions);
  m.collision_rate = rate(any_hits);
  m.dynamic_collision_rate = rate(dynamic_hits);
  m.wall_obstacle_collision_rate = rate(wall_hits);
  m.mean_human_distance = human_distance.optional();
  const Terminal terminal = log.steps.back().reward.terminal;
  m.success = terminal == Terminal::Goal ? 1 : 0;
  m.timeout = terminal == Terminal::Timeout ? 1 : 0;
  return m;
}

AggregateMetrics aggregate(std::span<const EpisodeMetrics> batch) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "cannot aggregate an empty batch");
  RunningMean discomfort, intrusion, ttc, collision, dynamic, wall, stalled, human, path, reward;
  long successes = 0, timeouts = 0;
  bool all_grouped = true;
  for (const EpisodeMetrics& e : batch) {
    discomfort.add(e.discomfort_score);
    if (e.group_intrusion_rate) {
      intrusion.add(*e.group_intrusion_rate);
    } else {
      all_grouped = false;
    }
    if (e.min_time_to_collision) ttc.add(static_cast<double>(*e.min_time_to_collision));
    collision.add(e.collision_rate);
    dynamic.add(e.dynamic_collision_rate);
    wall.add(e.wall_obstacle_collision_rate);
    timeouts += e.timeout;
    stalled.add(static_cast<double>(e.stalled_time));
    if (e.mean_human_distance) human.add(*e.mean_human_distance);
    path.add(static_cast<double>(e.path_length));
    successes += e.success;
    reward.add(e.total_reward);
  }
  AggregateMetrics a;
  a.episodes = batch.size();
  a.discomfort_score = discomfort.value();
  if (all_grouped) a.group_intrusion_rate = intrusion.value();
  a.min_time_to_collision = ttc.optional();
  a.collision_free_episodes = batch.size() - ttc.count();
  a.collision_rate = collision.value();
  a.dynamic_collision_rate = dynamic.value();
  a.wall_obstacle_collision_rate = wall.value();
  // Count ratios so that success and timeout rates of a full batch sum to exactly 1.
  const auto n = static_cast<double>(batch.size());
  a.timeout_rate = static_cast<double>(timeouts) / n;
  a.stalled_time = stalled.value();
  a.mean_human_distance = human.optional();
  a.path_length = path.value();
  a.success_rate = static_cast<double>(successes) / n;
  a.total_reward = reward.value();
  return a;
}

// ---------------------------------------------------------------------------
// Tables

namespace {

constexpr const char* kAbsent = "−";

struct MetricRow {
  const char* name;
  std::function<std::optional<double>(const AggregateMetrics&)> value;
  const char* absent_text = kAbsent;
};

std::vector<MetricRow> metric_rows(const MetricsConfig& config) {
  const double sps = config.steps_per_second;
  return {
      {"Discomfort Score", [](const AggregateMetrics& a) { return std::optional(a.discomfort_score); }},
      {"Group Intrusion Rate", [](const AggregateMetrics& a) { return a.group_intrusion_rate; }},
      {"Min Time to Collision (s)",
       [sps](const AggregateMetrics& a) -> std::optional<double> {
         if (!a.min_time_to_collision) return std::nullopt;
         return *a.min_time_to_collision / sps;
       },
       "n/a (0 colliding episodes)"},
      {"Collision-free Episodes",
       [](const AggregateMetrics& a) { return std::optional(static_cast<double>(a.collision_free_episodes)); }},
      {"Collision Rate", [](const AggregateMetrics& a) { return std::optional(a.collision_rate); }},
      {"Dynamic Collision Rate", [](const AggregateMetrics& a) { return std::optional(a.dynamic_collision_rate); }},
      {"Wall/Obstacle Collision Rate",
       [](const AggregateMetrics& a) { return std::optional(a.wall_obstacle_collision_rate); }},
      {"Timeout", [](const AggregateMetrics& a) { return std::optional(a.timeout_rate); }},
      {"Stalled Time (s)", [sps](const AggregateMetrics& a) { return std::optional(a.stalled_time / sps); }},
      {"Human Distance (grid units)", [](const AggregateMetrics& a) { return a.mean_human_distance; }},
      {"Path Length (steps)", [](const AggregateMetrics& a) { return std::optional(a.path_length); }},
      {"Success Rate", [](const AggregateMetrics& a) { return std::optional(a.success_rate); }},
      {"Total Reward", [](const AggregateMetrics& a) { return std::optional(a.total_reward); }},
  };
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Cells per row: metric name, then one per column (plus delta).
std::vector<std::vector<std::string>> table_cells(std::span<const TableColumn> columns, const MetricsConfig& config,
                                                  bool with_delta) {
  const bool delta = with_delta && columns.size() == 2;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Metric"};
  for (const TableColumn& c : columns) header.push_back(c.label);
  if (delta) header.emplace_back("Delta");
  rows.push_back(std::move(header));
  for (const MetricRow& metric : metric_rows(config)) {
    std::vector<std::string> row{metric.name};
    std::vector<std::optional<double>> values;
    for (const TableColumn& c : columns) {
      values.push_back(metric.value(c.metrics));
      row.push_back(values.back() ? format_value(*values.back()) : metric.absent_text);
    }
    if (delta) row.push_back(values[0] && values[1] ? format_value(*values[1] - *values[0]) : kAbsent);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Display width, counting each UTF-8 sequence as one column.
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char ch) { return (static_cast<unsigned char>(ch) & 0xC0) != 0x80; }));
}

}  // namespace

std::string render_table(std::span<const TableColumn> columns, const MetricsConfig& config, bool with_delta) {
  const auto rows = table_cells(columns, config, with_delta);
  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], display_width(row[i]));
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      const std::string& cell = rows[r][i];
      const std::string pad(widths[i] - display_width(cell), ' ');
      if (i == 0) {
        os << cell << pad;
      } else {
        os << "  " << pad << cell;
      }
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
  }
  return os.str();
}

void write_table_csv(std::ostream& out, std::span<const TableColumn> columns, const MetricsConfig& config,
                     bool with_delta) {
  std::ostringstream os;
  os << "# sango-metrics-table v1\n";
  for (const auto& row : table_cells(columns, config, with_delta)) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) os << ',';
      os << row[i];
    }
    os << '\n';
  }
  out << os.str();
}

void write_episode_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> episodes) {
  std::ostringstream os;
  os.precision(17);
  os << "# sango-episode-metrics v1\n"
        "episode,discomfort_score,group_intrusion_rate,min_time_to_collision,collision_rate,"
        "dynamic_collision_rate,wall_obstacle_collision_rate,timeout,stalled_time,mean_human_distance,"
        "path_length,success,total_reward\n";
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const EpisodeMetrics& e = episodes[i];
    os << i << ',' << e.discomfort_score << ',';
    if (e.group_intrusion_rate) os << *e.group_intrusion_rate;
    os << ',';
    if (e.min_time_to_collision) os << *e.min_time_to_collision;
    os << ',' << e.collision_rate << ',' << e.dynamic_collision_rate << ',' << e.wall_obstacle_collision_rate << ','
       << e.timeout << ',' << e.stalled_time << ',';
    if (e.mean_human_distance) os << *e.mean_human_distance;
    os << ',' << e.path_length << ',' << e.success << ',' << e.total_reward << '\n';
  }
  out << os.str();
}

SignTest paired_sign_test(std::span<const double> treatment, std::span<const double> control) {
  if (treatment.size() != control.size()) {
    throw Error(ErrorCode::InvalidConfig, "sign test needs paired samples of equal length");
  }
  SignTest t;
  for (std::size_t i = 0; i < treatment.size(); ++i) {
    if (treatment[i] < control[i]) {
      ++t.wins;
    } else if (treatment[i] > control[i]) {
      ++t.losses;
    } else {
      ++t.ties;
    }
  }
  const long n = t.wins + t.losses;
  double tail = 0.0;
  for (long k = t.wins; k <= n; ++k) {
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    tail += std::exp(log_choose - n * std::log(2.0));
  }
  t.p_value = std::min(1.0, tail);
  return t;
}

}  // namespace sango
