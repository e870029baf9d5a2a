#include "gra/studies.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gra/channel.hpp"
#include "gra/rng.hpp"

namespace gra {

namespace {

// Salt of the device-reported CSI seen at the BS.
constexpr std::uint64_t kReportedEstimator = 0x5e1;

std::uint64_t field_seed(std::uint64_t seed) {
  return mix64(seed ^ (static_cast<std::uint64_t>(Stream::channel) << 56));
}

FieldCsiTable make_view(const SimConfig& config, const LinkField& field,
                        const std::optional<GeoDatabase>& gdb,
                        const std::vector<Position>& positions) {
  if (gdb) return gdb->csi_table(positions);
  return FieldCsiTable(field, positions, config.channel.csi_mae, kReportedEstimator);
}

std::vector<DeviceProfile> make_devices(const SimConfig& config, std::uint64_t seed) {
  auto rng = make_stream(seed, Stream::scenario);
  return build_scenario(config.scenario, rng);
}

std::vector<Position> positions_of(const std::vector<DeviceProfile>& devices) {
  std::vector<Position> out(devices.size());
  for (const auto& d : devices) out[d.id] = d.position;
  return out;
}

}  // namespace

World::World(const SimConfig& cfg, std::uint64_t seed)
    : config(cfg),
      devices(make_devices(cfg, seed)),
      positions(positions_of(devices)),
      field(cfg.channel.path_loss, field_seed(seed)),
      gdb(cfg.gdb.assisted
              ? std::optional<GeoDatabase>(std::in_place, cfg.scenario.area_side,
                                           PropagationMap{cfg.gdb.residual_mae, cfg.channel.path_loss},
                                           field)
              : std::nullopt),
      csi(make_view(cfg, field, gdb, positions)) {
  if (!gdb || devices.empty()) return;
  // The lowest id registers directly and acts as MASTER for everyone else.
  RegistrationRecord master;
  master.device = devices.front().id;
  master.location = devices.front().position;
  gdb->register_device(master);
  std::vector<RegistrationRecord> slaves;
  slaves.reserve(devices.size() - 1);
  for (std::size_t i = 1; i < devices.size(); ++i) {
    RegistrationRecord r;
    r.device = devices[i].id;
    r.location = devices[i].position;
    slaves.push_back(r);
  }
  gdb->register_on_behalf(master.device, std::move(slaves));
}

Partition World::group(Rng& rng, const GcHistory& history) const {
  const auto cc = config.clustering_config();
  if (gdb) {
    const auto records = gdb->records();
    return gdb->advise_grouping(records, cc, rng, history);
  }
  return global_group_update(devices, csi, cc, history, rng);
}

void World::sync_positions() {
  for (const auto& d : devices) {
    positions[d.id] = d.position;
    if (gdb) gdb->update_location(d.id, d.position);
  }
}

LinkQuality partition_link_quality(const Partition& partition, const World& world) {
  const auto& ch = world.config.channel;
  const std::size_t payload = world.config.scenario.payload;
  LinkQuality q;
  double per_sum = 0.0;
  double rel_sum = 0.0;
  for (const auto& g : partition.groups) {
    for (DeviceId m : g.members) {
      if (m == g.gc) continue;
      const double per = packet_error_rate(snr(ch.budget, world.true_loss(m, g.gc)), payload);
      per_sum += per;
      rel_sum += d2d_link_reliability(per, ch.d2d, g.size());
      q.worst_per = std::max(q.worst_per, per);
      ++q.links;
    }
  }
  if (q.links > 0) {
    q.mean_per = per_sum / static_cast<double>(q.links);
    q.mean_reliability = rel_sum / static_cast<double>(q.links);
  }
  return q;
}

LinkQuality initial_link_quality(const SimConfig& config, std::uint64_t seed) {
  validate(config);
  World world(config, seed);
  auto rng = make_stream(seed, Stream::clustering);
  return partition_link_quality(world.group(rng, GcHistory{}), world);
}

SimConfig csi_study_config(const SimConfig& config, double mae) {
  SimConfig c = config;
  c.scenario.device_count = config.study.csi_devices;
  c.scenario.area_side = config.study.csi_area_side;
  c.clustering.max_group_size =
      (config.study.csi_devices + config.study.csi_clusters - 1) / config.study.csi_clusters;
  c.gdb.assisted = false;
  c.channel.csi_mae = mae;
  return c;
}

GroupSizeQuality group_size_quality(const SimConfig& config, std::size_t group_size,
                                    std::uint64_t seed) {
  const auto& ch = config.channel;
  const double density = config.study.group_density;
  const std::size_t trials = config.study.group_trials;
  GroupSizeQuality out;
  if (group_size < 2 || trials == 0) {
    out.mean_reliability = 1.0;
    return out;
  }
  double per_sum = 0.0;
  double rel_sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(Stream::study), static_cast<std::uint32_t>(t)};
    Rng rng(seq);
    std::exponential_distribution<double> exp1(1.0);
    double area = 0.0;
    double trial_per = 0.0;
    double trial_rel = 0.0;
    // k-th nearest neighbour of a Poisson field: pi r^2 rho is a sum of k unit exponentials.
    for (std::size_t k = 1; k < group_size; ++k) {
      area += exp1(rng);
      const double r = std::sqrt(area / (std::numbers::pi * density));
      trial_per += expected_packet_error_rate(ch.path_loss, ch.budget, r, config.scenario.payload);
      trial_rel += expected_link_reliability(ch.path_loss, ch.budget, ch.d2d, r,
                                             config.scenario.payload, group_size);
    }
    per_sum += trial_per / static_cast<double>(group_size - 1);
    rel_sum += trial_rel / static_cast<double>(group_size - 1);
  }
  out.mean_per = per_sum / static_cast<double>(trials);
  out.mean_reliability = rel_sum / static_cast<double>(trials);
  return out;
}

}  // namespace gra
