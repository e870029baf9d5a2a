#include "gra/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numeric>

#include "gra/diagnostics.hpp"

namespace gra {

bool Group::contains(DeviceId d) const {
  return std::binary_search(members.begin(), members.end(), d);
}

Group* Partition::find_group_of(DeviceId d) {
  for (auto& g : groups) {
    if (g.contains(d)) return &g;
  }
  return nullptr;
}

const Group* Partition::find_group_of(DeviceId d) const {
  return const_cast<Partition*>(this)->find_group_of(d);
}

Group* Partition::find_group(GroupId id) {
  for (auto& g : groups) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

const Group* Partition::find_group(GroupId id) const {
  return const_cast<Partition*>(this)->find_group(id);
}

std::size_t Partition::clustered_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

double GcHistory::duty(DeviceId d) const {
  const auto it = duty_.find(d);
  return it == duty_.end() ? 0.0 : it->second;
}

void GcHistory::add(DeviceId d, double seconds) {
  if (seconds > 0.0) duty_[d] += seconds;
}

double worst_link_snr(const Group& group, DeviceId candidate, const CsiTable& csi,
                      const LinkBudget& budget) {
  double worst = std::numeric_limits<double>::infinity();
  for (DeviceId m : group.members) {
    if (m == candidate) continue;
    worst = std::min(worst, snr(budget, csi.estimated_loss(candidate, m)));
  }
  return worst;
}

DeviceId select_gc(const Group& group, const CsiTable& csi, const GcHistory& history,
                   const ClusteringConfig& config) {
  if (group.members.empty()) throw std::invalid_argument("select_gc: empty group");
  if (group.members.size() == 1) return group.members.front();

  struct Candidate {
    DeviceId id;
    double worst;
    double duty;
  };
  std::vector<Candidate> all;
  all.reserve(group.members.size());
  for (DeviceId m : group.members) {
    all.push_back({m, worst_link_snr(group, m, csi, config.budget), history.duty(m)});
  }

  std::vector<Candidate> pool;
  if (config.gc_capable) {
    for (const auto& c : all) {
      if (config.gc_capable(c.id)) pool.push_back(c);
    }
  }
  if (pool.empty()) pool = all;

  std::vector<Candidate> eligible;
  for (const auto& c : pool) {
    if (c.worst >= config.snr_threshold) eligible.push_back(c);
  }
  if (eligible.empty()) eligible = pool;

  const auto best = std::min_element(eligible.begin(), eligible.end(),
                                     [](const Candidate& a, const Candidate& b) {
                                       if (a.duty != b.duty) return a.duty < b.duty;
                                       if (a.worst != b.worst) return a.worst > b.worst;
                                       return a.id < b.id;
                                     });
  return best->id;
}

namespace {

double squared(const Position& a, const Position& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

std::vector<Position> kmeans_plus_plus(std::span<const DeviceProfile> devices, std::size_t k,
                                       Rng& rng) {
  std::vector<Position> centers;
  centers.reserve(k);
  std::uniform_int_distribution<std::size_t> first(0, devices.size() - 1);
  centers.push_back(devices[first(rng)].position);

  std::vector<double> nearest(devices.size(), std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < devices.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared(devices[i].position, centers.back()));
      total += nearest[i];
    }
    if (total <= 0.0) {
      // Fewer distinct positions than clusters; duplicate an existing point.
      centers.push_back(devices[first(rng)].position);
      continue;
    }
    double pick = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t chosen = devices.size() - 1;
    for (std::size_t i = 0; i < devices.size(); ++i) {
      pick -= nearest[i];
      if (pick < 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(devices[chosen].position);
  }
  return centers;
}

std::size_t nearest_center(const Position& p, const std::vector<Position>& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = squared(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Overflowing clusters keep their members closest to the centroid; the rest
// move, farthest first, to the nearest centroid that still has room.
void enforce_capacity(std::span<const DeviceProfile> devices, const std::vector<Position>& centers,
                      std::vector<std::size_t>& assignment, std::size_t capacity) {
  const std::size_t k = centers.size();
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < devices.size(); ++i) members[assignment[i]].push_back(i);

  std::vector<std::size_t> overflow;
  std::vector<std::size_t> load(k, 0);
  for (std::size_t c = 0; c < k; ++c) {
    auto& m = members[c];
    std::stable_sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
      return squared(devices[a].position, centers[c]) < squared(devices[b].position, centers[c]);
    });
    load[c] = std::min(m.size(), capacity);
    for (std::size_t j = capacity; j < m.size(); ++j) overflow.push_back(m[j]);
  }
  std::stable_sort(overflow.begin(), overflow.end(), [&](std::size_t a, std::size_t b) {
    return squared(devices[a].position, centers[assignment[a]]) >
           squared(devices[b].position, centers[assignment[b]]);
  });
  for (std::size_t i : overflow) {
    std::size_t best = k;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (load[c] >= capacity) continue;
      const double d = squared(devices[i].position, centers[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assignment[i] = best;
    ++load[best];
  }
}

}  // namespace

Partition global_group_update(std::span<const DeviceProfile> devices, const CsiTable& csi,
                              const ClusteringConfig& config, const GcHistory& history, Rng& rng) {
  Partition partition;
  if (devices.empty()) return partition;
  if (config.max_group_size < 1) throw ConfigError("clustering.max_group_size: must be >= 1");

  const std::size_t n = devices.size();
  const std::size_t k = (n + config.max_group_size - 1) / config.max_group_size;

  auto centers = kmeans_plus_plus(devices, k, rng);
  std::vector<std::size_t> assignment(n, k);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(config.kmeans_iterations, 1); ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = nearest_center(devices[i].position, centers);
      if (c != assignment[i]) {
        assignment[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Position> sum(k);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[assignment[i]].x += devices[i].position.x;
      sum[assignment[i]].y += devices[i].position.y;
      ++count[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        centers[c] = {sum[c].x / static_cast<double>(count[c]),
                      sum[c].y / static_cast<double>(count[c])};
      }
    }
  }
  enforce_capacity(devices, centers, assignment, config.max_group_size);
  // Capacity-constrained refinement: recentre on the feasible assignment and
  // redo nearest-then-overflow until it settles.
  for (std::size_t iter = 0; iter < std::max<std::size_t>(config.kmeans_iterations, 1); ++iter) {
    std::vector<Position> sum(k);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[assignment[i]].x += devices[i].position.x;
      sum[assignment[i]].y += devices[i].position.y;
      ++count[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        centers[c] = {sum[c].x / static_cast<double>(count[c]),
                      sum[c].y / static_cast<double>(count[c])};
      }
    }
    auto next = assignment;
    for (std::size_t i = 0; i < n; ++i) next[i] = nearest_center(devices[i].position, centers);
    enforce_capacity(devices, centers, next, config.max_group_size);
    if (next == assignment) break;
    assignment = std::move(next);
  }

  std::vector<Group> groups(k);
  for (std::size_t i = 0; i < n; ++i) groups[assignment[i]].members.push_back(devices[i].id);
  for (auto& g : groups) {
    if (g.members.empty()) continue;
    std::sort(g.members.begin(), g.members.end());
    g.id = partition.next_group_id++;
    g.gc = select_gc(g, csi, history, config);
    partition.groups.push_back(std::move(g));
  }
  return partition;
}

Partition group_join(DeviceId device, Partition partition, const CsiTable& csi,
                     const GcHistory& history, const ClusteringConfig& config,
                     std::optional<GroupId> exclude) {
  partition.unclustered.erase(device);

  Group* target = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (auto& g : partition.groups) {
    if (g.size() >= config.max_group_size) continue;
    if (exclude && g.id == *exclude) continue;
    const double loss = csi.estimated_loss(device, g.gc);
    // Groups are scanned in insertion order; compare ids for the tie-break.
    if (target == nullptr || loss < best || (loss == best && g.id < target->id)) {
      target = &g;
      best = loss;
    }
  }

  if (target == nullptr) {
    Group g;
    g.id = partition.next_group_id++;
    g.members = {device};
    g.gc = device;
    partition.groups.push_back(std::move(g));
    return partition;
  }
  target->members.insert(std::upper_bound(target->members.begin(), target->members.end(), device),
                         device);
  target->gc = select_gc(*target, csi, history, config);
  return partition;
}

Partition group_leave(DeviceId device, Partition partition, const CsiTable& csi,
                      const GcHistory& history, const ClusteringConfig& config) {
  auto it = std::find_if(partition.groups.begin(), partition.groups.end(),
                         [&](const Group& g) { return g.contains(device); });
  if (it == partition.groups.end()) {
    warn(fmt::format("group_leave: device {} is not in any group", device));
    return partition;
  }
  it->members.erase(std::lower_bound(it->members.begin(), it->members.end(), device));
  partition.unclustered.insert(device);
  if (it->members.empty()) {
    partition.groups.erase(it);
  } else if (it->gc == device) {
    it->gc = select_gc(*it, csi, history, config);
  }
  return partition;
}

std::optional<std::string> check_partition(const Partition& partition,
                                           std::span<const DeviceId> universe,
                                           std::size_t max_group_size) {
  std::unordered_map<DeviceId, int> seen;
  for (const auto& g : partition.groups) {
    if (g.members.empty()) return fmt::format("group {} is empty", g.id);
    if (g.members.size() > max_group_size) {
      return fmt::format("group {} has {} members (cap {})", g.id, g.members.size(), max_group_size);
    }
    if (!std::is_sorted(g.members.begin(), g.members.end())) {
      return fmt::format("group {} members not sorted", g.id);
    }
    if (!g.contains(g.gc)) return fmt::format("group {} gc {} is not a member", g.id, g.gc);
    for (DeviceId m : g.members) {
      if (++seen[m] > 1) return fmt::format("device {} appears more than once", m);
    }
  }
  for (DeviceId d : partition.unclustered) {
    if (++seen[d] > 1) return fmt::format("device {} is both clustered and unclustered", d);
  }
  for (DeviceId d : universe) {
    if (seen.find(d) == seen.end()) return fmt::format("device {} is not covered", d);
  }
  if (seen.size() != universe.size()) return std::string("partition holds devices outside the universe");
  return std::nullopt;
}

double within_group_distance(const Partition& partition, std::span<const Position> positions) {
  double total = 0.0;
  for (const auto& g : partition.groups) {
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      for (std::size_t j = i + 1; j < g.members.size(); ++j) {
        total += distance(positions[g.members[i]], positions[g.members[j]]);
      }
    }
  }
  return total;
}

}  // namespace gra
