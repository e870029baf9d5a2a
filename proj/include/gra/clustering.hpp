#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gra/channel.hpp"
#include "gra/rng.hpp"
#include "gra/scenario.hpp"
#include "gra/types.hpp"

namespace gra {

struct Group {
  GroupId id = 0;
  std::vector<DeviceId> members;  // sorted ascending, includes gc
  DeviceId gc = 0;

  bool contains(DeviceId d) const;
  std::size_t size() const { return members.size(); }
  friend bool operator==(const Group&, const Group&) = default;
};

struct Partition {
  std::vector<Group> groups;
  std::set<DeviceId> unclustered;
  GroupId next_group_id = 0;

  Group* find_group_of(DeviceId d);
  const Group* find_group_of(DeviceId d) const;
  Group* find_group(GroupId id);
  const Group* find_group(GroupId id) const;
  std::size_t clustered_count() const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Cumulative seconds each device has served as GC.
class GcHistory {
 public:
  double duty(DeviceId d) const;
  void add(DeviceId d, double seconds);

 private:
  std::unordered_map<DeviceId, double> duty_;
};

struct ClusteringConfig {
  std::size_t max_group_size = 50;
  double snr_threshold = 10.0;  // dB, worst-link SNR for GC candidacy
  LinkBudget budget;
  std::size_t kmeans_iterations = 50;
  /// Optional capability filter; devices failing it never become GC while an
  /// eligible member exists.
  std::function<bool(DeviceId)> gc_capable;
};

/// Worst (minimum) estimated SNR from `candidate` to every other member.
double worst_link_snr(const Group& group, DeviceId candidate, const CsiTable& csi,
                      const LinkBudget& budget);

DeviceId select_gc(const Group& group, const CsiTable& csi, const GcHistory& history,
                   const ClusteringConfig& config);

/// Capacity-constrained k-means over positions, k = ceil(N / max_group_size),
/// with k-means++ seeding from `rng`, then GC selection for every group.
Partition global_group_update(std::span<const DeviceProfile> devices, const CsiTable& csi,
                              const ClusteringConfig& config, const GcHistory& history, Rng& rng);

/// Places an unclustered device in the non-full group whose GC has the lowest
/// estimated loss to it (ties: lower group id), or a new singleton group.
/// `exclude` keeps a device from rejoining the group it just failed in.
Partition group_join(DeviceId device, Partition partition, const CsiTable& csi,
                     const GcHistory& history, const ClusteringConfig& config,
                     std::optional<GroupId> exclude = std::nullopt);

/// Moves a device to the unclustered set; deletes emptied groups and
/// reselects the GC when the leaver was GC. Unknown devices warn and no-op.
Partition group_leave(DeviceId device, Partition partition, const CsiTable& csi,
                      const GcHistory& history, const ClusteringConfig& config);

/// Checks disjointness, coverage of `universe`, the capacity bound and GC
/// membership. Returns a description of the first violation.
std::optional<std::string> check_partition(const Partition& partition,
                                           std::span<const DeviceId> universe,
                                           std::size_t max_group_size);

/// Sum over groups of pairwise Euclidean distances between members.
double within_group_distance(const Partition& partition, std::span<const Position> positions);

}  // namespace gra
