#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "sango/geometry.hpp"
#include "sango/motion.hpp"

namespace sango {

struct DbscanParams {
  double eps = 1.5;
  int min_pts = 3;
  double sensing_range = 7.0;
  long memory_expiry = 10;

  void validate() const;
};

enum class PointRole : std::uint8_t { Core, Boundary, Noise };

std::string_view to_string(PointRole role);

struct PointLabel {
  PointRole role = PointRole::Noise;
  int cluster = -1;  // -1 for noise

  friend bool operator==(const PointLabel&, const PointLabel&) = default;
};

struct ClusterPoint {
  int id = 0;  // unique per call
  Vec2 position;
};

/// DBSCAN with a closed eps-neighborhood that counts the point itself.
/// Cluster ids are canonical: clusters are numbered 0.. in increasing order of
/// their smallest core point id. A border point reachable from several
/// clusters joins the one owning its nearest core point (ties: lower id).
/// The result is therefore independent of input order.
std::vector<PointLabel> dbscan(std::span<const ClusterPoint> points, double eps, int min_pts);

struct ClusterMember {
  int id = 0;
  Vec2 position;
  PointRole role = PointRole::Core;
};

struct Cluster {
  int cluster_id = 0;
  std::vector<ClusterMember> members;  // sorted by id
  Vec2 centroid;
  long last_seen = 0;

  std::vector<int> member_ids() const;
  std::vector<int> core_ids() const;
  std::vector<int> boundary_ids() const;
};

struct GroupSnapshot {
  std::vector<Cluster> clusters;
  std::vector<int> noise_ids;  // sorted
};

/// Clusters the obstacles within `sensing_range` of the agent by position.
GroupSnapshot sense_and_group(Vec2 agent, std::span<const DynamicObstacle> obstacles, const DbscanParams& params,
                              long step = 0);

/// Temporal group identity. Fresh clusters inherit the id of the remembered
/// cluster they overlap most; groups unseen for longer than `memory_expiry`
/// steps are forgotten.
class GroupMemory {
 public:
  /// Throws NonMonotonicStep unless `step` exceeds the previous update's step.
  void update(const GroupSnapshot& fresh, long step, const DbscanParams& params);

  const std::vector<Cluster>& active_clusters() const { return active_; }
  const std::vector<int>& noise_ids() const { return noise_ids_; }
  std::optional<long> last_step() const { return last_step_; }

 private:
  std::vector<Cluster> active_;
  std::vector<int> noise_ids_;
  std::optional<long> last_step_;
  int next_id_ = 0;
};

GroupMemory update_memory(GroupMemory memory, const GroupSnapshot& fresh, long step, const DbscanParams& params);

/// Cluster snapshot CSV: `step,cluster_id,obstacle_id,role`; noise rows use cluster_id -1.
void write_cluster_header(std::ostream& out);
void write_cluster_rows(std::ostream& out, long step, std::span<const Cluster> clusters,
                        std::span<const int> noise_ids);

}  // namespace sango
