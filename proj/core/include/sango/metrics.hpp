#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sango/env.hpp"
#include "sango/reward.hpp"

namespace sango {

struct MetricsConfig {
  /// Discomfort weights for {dynamic, group boundary, group core}.
  std::array<double, 3> weights{1.0, 1.0, 2.0};
  double steps_per_second = 100.0;
};

struct EpisodeMetrics {
  double discomfort_score = 0.0;
  std::optional<double> group_intrusion_rate;  // absent when grouping is disabled
  std::optional<long> min_time_to_collision;   // steps; absent when nothing collided
  double collision_rate = 0.0;
  double dynamic_collision_rate = 0.0;
  double wall_obstacle_collision_rate = 0.0;
  int timeout = 0;
  long stalled_time = 0;
  std::optional<double> mean_human_distance;  // grid units; absent without dynamic obstacles
  long path_length = 0;
  int success = 0;
  double total_reward = 0.0;

  friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

/// Pure function of the log. Throws IncompleteLog unless the last row is terminal.
EpisodeMetrics score_episode(const EpisodeLog& log, const RewardParams& params, const MetricsConfig& config = {});

struct AggregateMetrics {
  std::size_t episodes = 0;
  double discomfort_score = 0.0;
  std::optional<double> group_intrusion_rate;
  std::optional<double> min_time_to_collision;  // mean over colliding episodes
  std::size_t collision_free_episodes = 0;
  double collision_rate = 0.0;
  double dynamic_collision_rate = 0.0;
  double wall_obstacle_collision_rate = 0.0;
  double timeout_rate = 0.0;
  double stalled_time = 0.0;
  std::optional<double> mean_human_distance;
  double path_length = 0.0;
  double success_rate = 0.0;
  double total_reward = 0.0;

  friend bool operator==(const AggregateMetrics&, const AggregateMetrics&) = default;
};

/// Field-wise means. Throws EmptyBatch.
AggregateMetrics aggregate(std::span<const EpisodeMetrics> batch);

struct TableColumn {
  std::string label;
  AggregateMetrics metrics;
};

/// Metric rows by column; times are shown in seconds. With `with_delta` and
/// two columns, a third column holds (second - first).
std::string render_table(std::span<const TableColumn> columns, const MetricsConfig& config, bool with_delta = false);
void write_table_csv(std::ostream& out, std::span<const TableColumn> columns, const MetricsConfig& config,
                     bool with_delta = false);

/// Paired sign test of `treatment` against `control`. Pairs with
/// treatment < control count as wins, ties are dropped, and p_value is the
/// one-sided exact binomial probability of at least `wins` wins among
/// wins + losses fair coin flips. Throws InvalidConfig on a length mismatch.
struct SignTest {
  long wins = 0;
  long losses = 0;
  long ties = 0;
  double p_value = 1.0;
};
SignTest paired_sign_test(std::span<const double> treatment, std::span<const double> control);

/// Per-episode metrics CSV with a versioned header.
void write_episode_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> episodes);

}  // namespace sango
