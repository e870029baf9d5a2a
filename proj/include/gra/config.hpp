#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "gra/channel.hpp"
#include "gra/clustering.hpp"
#include "gra/protocol.hpp"
#include "gra/rach.hpp"
#include "gra/scenario.hpp"

namespace gra {

struct ChannelConfig {
  PathLossModel path_loss;
  LinkBudget budget;
  D2dSlotBudget d2d;
  double csi_mae = 6.0;  // dB, device-side estimation error

  friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

struct ClusteringParams {
  std::size_t max_group_size = 50;
  double snr_threshold = 10.0;
  std::size_t kmeans_iterations = 50;

  friend bool operator==(const ClusteringParams&, const ClusteringParams&) = default;
};

struct GdbConfig {
  bool assisted = true;
  double residual_mae = 1.0;  // dB

  friend bool operator==(const GdbConfig&, const GdbConfig&) = default;
};

struct EngineConfig {
  double horizon = 30.0;          // s
  double update_interval = 10.0;  // s between global group updates
  double mobility_step = 1.0;     // s between mobility ticks
  double ull_budget = 0.1;        // s, delay budget of ULL access classes

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

/// Parameters of the link-level studies behind the group-size and CSI-error
/// sweeps.
struct StudyConfig {
  double group_density = 1e-3;     // devices per m^2 around a GC
  std::size_t group_trials = 40;   // geometries per Monte-Carlo run
  std::size_t csi_devices = 8000;
  std::size_t csi_clusters = 50;
  double csi_area_side = 500.0;    // m

  friend bool operator==(const StudyConfig&, const StudyConfig&) = default;
};

struct SimConfig {
  ScenarioConfig scenario;
  ChannelConfig channel;
  ClusteringParams clustering;
  RachConfig rach;
  EabConfig eab;
  ProtocolConfig protocol;
  GdbConfig gdb;
  EngineConfig engine;
  StudyConfig study;

  ClusteringConfig clustering_config() const;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Throws ConfigError naming the offending key.
void validate(const SimConfig& config);

/// Parses the YAML config text; missing keys take defaults, unknown keys and
/// invariant violations raise ConfigError with the key path and line.
SimConfig parse_config(std::string_view text);

SimConfig load_config(const std::string& path);

/// Fully populated YAML rendering; parse_config(emit_config(c)) == c.
std::string emit_config(const SimConfig& config);

}  // namespace gra
