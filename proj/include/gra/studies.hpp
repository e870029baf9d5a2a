#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gra/clustering.hpp"
#include "gra/config.hpp"
#include "gra/gdb.hpp"

namespace gra {

/// Devices, propagation field and the CSI view that drives grouping for one
/// run. Non-movable: the CSI table refers to the position array.
class World {
 public:
  World(const SimConfig& config, std::uint64_t seed);
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  /// Global group update with whichever CSI the config selects (GDB advice
  /// or device-reported estimates at the BS).
  Partition group(Rng& rng, const GcHistory& history) const;

  /// Copies device positions into the shared array; with a GDB, also files
  /// location reports for every device.
  void sync_positions();

  /// True D2D loss between two devices at their current positions.
  double true_loss(DeviceId a, DeviceId b) const { return csi.true_loss(a, b); }

  const SimConfig& config;
  std::vector<DeviceProfile> devices;
  std::vector<Position> positions;
  LinkField field;
  std::optional<GeoDatabase> gdb;
  FieldCsiTable csi;
};

struct LinkQuality {
  double mean_per = 0.0;
  double worst_per = 0.0;
  double mean_reliability = 0.0;
  std::size_t links = 0;
};

/// True-channel PER and slot reliability over every GM-to-GC link.
LinkQuality partition_link_quality(const Partition& partition, const World& world);

/// Clusters a fresh world and evaluates its first cycle's links.
LinkQuality initial_link_quality(const SimConfig& config, std::uint64_t seed);

/// The configuration a CSI-error study point runs with: the dense deployment
/// from the study section, BS-side clustering at the given MAE.
SimConfig csi_study_config(const SimConfig& config, double mae);

struct GroupSizeQuality {
  double mean_per = 0.0;
  double mean_reliability = 0.0;
};

/// Shadowing-averaged PER and reliability of a GC and its group_size - 1
/// nearest neighbours in a Poisson field of the configured density, averaged
/// over study.group_trials geometries. Geometry depends only on the seed, so
/// different group sizes see common random numbers.
GroupSizeQuality group_size_quality(const SimConfig& config, std::size_t group_size,
                                    std::uint64_t seed);

}  // namespace gra
