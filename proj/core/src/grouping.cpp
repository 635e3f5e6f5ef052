#include "sango/grouping.hpp"

#include <algorithm>
#include <iterator>
#include <limits>
#include <numeric>
#include <ostream>

#include "sango/error.hpp"

namespace sango {

void DbscanParams::validate() const {
  if (!(eps > 0.0) || min_pts < 1 || !(sensing_range > 0.0) || memory_expiry < 1) {
    throw Error(ErrorCode::InvalidConfig, "dbscan parameters out of range");
  }
}

std::string_view to_string(PointRole role) {
  switch (role) {
    case PointRole::Core: return "core";
    case PointRole::Boundary: return "boundary";
    case PointRole::Noise: return "noise";
  }
  return "unknown";
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<PointLabel> dbscan(std::span<const ClusterPoint> points, double eps, int min_pts) {
  const std::size_t n = points.size();
  std::vector<PointLabel> labels(n);
  if (n == 0) return labels;
  const double eps_sq = eps * eps;

  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    neighbors[i].push_back(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (norm_sq(points[i].position - points[j].position) <= eps_sq) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
      }
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_pts);

  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (std::size_t j : neighbors[i]) {
      if (core[j]) sets.unite(i, j);
    }
  }

  // Canonical numbering by smallest core id per component.
  std::vector<int> min_id(n, std::numeric_limits<int>::max());
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      int& m = min_id[sets.find(i)];
      m = std::min(m, points[i].id);
    }
  }
  std::vector<std::pair<int, std::size_t>> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i] && sets.find(i) == i) roots.emplace_back(min_id[i], i);
  }
  std::sort(roots.begin(), roots.end());
  std::vector<int> cluster_of_root(n, -1);
  for (std::size_t k = 0; k < roots.size(); ++k) cluster_of_root[roots[k].second] = static_cast<int>(k);

  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) labels[i] = {PointRole::Core, cluster_of_root[sets.find(i)]};
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best_sq = std::numeric_limits<double>::infinity();
    int best_cluster = -1;
    for (std::size_t j : neighbors[i]) {
      if (!core[j]) continue;
      const double d_sq = norm_sq(points[i].position - points[j].position);
      const int c = labels[j].cluster;
      if (d_sq < best_sq || (d_sq == best_sq && c < best_cluster)) {
        best_sq = d_sq;
        best_cluster = c;
      }
    }
    if (best_cluster >= 0) labels[i] = {PointRole::Boundary, best_cluster};
  }
  return labels;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> ids_with_role(const Cluster& c, std::optional<PointRole> role) {
  std::vector<int> ids;
  for (const ClusterMember& m : c.members) {
    if (!role || m.role == *role) ids.push_back(m.id);
  }
  return ids;
}

Vec2 centroid_of(const std::vector<ClusterMember>& members) {
  Vec2 sum;
  for (const ClusterMember& m : members) sum += m.position;
  return members.empty() ? sum : sum / static_cast<double>(members.size());
}

}  // namespace

std::vector<int> Cluster::member_ids() const { return ids_with_role(*this, std::nullopt); }
std::vector<int> Cluster::core_ids() const { return ids_with_role(*this, PointRole::Core); }
std::vector<int> Cluster::boundary_ids() const { return ids_with_role(*this, PointRole::Boundary); }

GroupSnapshot sense_and_group(Vec2 agent, std::span<const DynamicObstacle> obstacles, const DbscanParams& params,
                              long step) {
  std::vector<ClusterPoint> points;
  const double range_sq = params.sensing_range * params.sensing_range;
  for (const DynamicObstacle& o : obstacles) {
    if (norm_sq(o.position - agent) <= range_sq) points.push_back({o.id, o.position});
  }
  const std::vector<PointLabel> labels = dbscan(points, params.eps, params.min_pts);

  GroupSnapshot snapshot;
  int num_clusters = 0;
  for (const PointLabel& l : labels) num_clusters = std::max(num_clusters, l.cluster + 1);
  snapshot.clusters.resize(static_cast<std::size_t>(num_clusters));
  for (int k = 0; k < num_clusters; ++k) {
    snapshot.clusters[static_cast<std::size_t>(k)].cluster_id = k;
    snapshot.clusters[static_cast<std::size_t>(k)].last_seen = step;
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i].role == PointRole::Noise) {
      snapshot.noise_ids.push_back(points[i].id);
    } else {
      snapshot.clusters[static_cast<std::size_t>(labels[i].cluster)].members.push_back(
          {points[i].id, points[i].position, labels[i].role});
    }
  }
  for (Cluster& c : snapshot.clusters) {
    std::sort(c.members.begin(), c.members.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    c.centroid = centroid_of(c.members);
  }
  std::sort(snapshot.noise_ids.begin(), snapshot.noise_ids.end());
  return snapshot;
}

// ---------------------------------------------------------------------------

void GroupMemory::update(const GroupSnapshot& fresh, long step, const DbscanParams& params) {
  if (last_step_ && step <= *last_step_) {
    throw Error(ErrorCode::NonMonotonicStep,
                "step " + std::to_string(step) + " does not follow " + std::to_string(*last_step_));
  }
  last_step_ = step;

  struct Match {
    std::size_t overlap;
    int active_id;
    std::size_t fresh_index;
    std::size_t active_index;
  };
  std::vector<Match> matches;
  for (std::size_t f = 0; f < fresh.clusters.size(); ++f) {
    const std::vector<int> fresh_ids = fresh.clusters[f].member_ids();
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const std::vector<int> active_ids = active_[a].member_ids();
      std::vector<int> common;
      std::set_intersection(fresh_ids.begin(), fresh_ids.end(), active_ids.begin(), active_ids.end(),
                            std::back_inserter(common));
      if (!common.empty()) matches.push_back({common.size(), active_[a].cluster_id, f, a});
    }
  }
  std::sort(matches.begin(), matches.end(), [](const Match& x, const Match& y) {
    if (x.overlap != y.overlap) return x.overlap > y.overlap;
    if (x.active_id != y.active_id) return x.active_id < y.active_id;
    return x.fresh_index < y.fresh_index;
  });

  std::vector<int> assigned(fresh.clusters.size(), -1);
  std::vector<bool> active_taken(active_.size(), false);
  for (const Match& m : matches) {
    if (assigned[m.fresh_index] >= 0 || active_taken[m.active_index]) continue;
    assigned[m.fresh_index] = m.active_id;
    active_taken[m.active_index] = true;
  }

  std::vector<Cluster> next;
  std::vector<int> seen_ids;
  for (std::size_t f = 0; f < fresh.clusters.size(); ++f) {
    Cluster c = fresh.clusters[f];
    c.cluster_id = assigned[f] >= 0 ? assigned[f] : next_id_++;
    c.last_seen = step;
    for (const ClusterMember& m : c.members) seen_ids.push_back(m.id);
    next.push_back(std::move(c));
  }
  std::sort(seen_ids.begin(), seen_ids.end());

  // Unmatched groups persist with stale positions until they expire. Members
  // now seen elsewhere are released so no id sits in two groups.
  for (std::size_t a = 0; a < active_.size(); ++a) {
    if (active_taken[a] || step - active_[a].last_seen > params.memory_expiry) continue;
    Cluster stale = active_[a];
    std::erase_if(stale.members,
                  [&](const ClusterMember& m) { return std::binary_search(seen_ids.begin(), seen_ids.end(), m.id); });
    if (stale.members.empty()) continue;
    stale.centroid = centroid_of(stale.members);
    next.push_back(std::move(stale));
  }
  std::sort(next.begin(), next.end(), [](const Cluster& x, const Cluster& y) { return x.cluster_id < y.cluster_id; });
  active_ = std::move(next);
  noise_ids_ = fresh.noise_ids;
}

GroupMemory update_memory(GroupMemory memory, const GroupSnapshot& fresh, long step, const DbscanParams& params) {
  memory.update(fresh, step, params);
  return memory;
}

void write_cluster_header(std::ostream& out) { out << "# sango-clusters v1\n" << "step,cluster_id,obstacle_id,role\n"; }

void write_cluster_rows(std::ostream& out, long step, std::span<const Cluster> clusters,
                        std::span<const int> noise_ids) {
  for (const Cluster& c : clusters) {
    for (const ClusterMember& m : c.members) {
      out << step << ',' << c.cluster_id << ',' << m.id << ',' << to_string(m.role) << '\n';
    }
  }
  for (int id : noise_ids) out << step << ",-1," << id << ",noise\n";
}

}  // namespace sango
