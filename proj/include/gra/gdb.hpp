#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "gra/channel.hpp"
#include "gra/clustering.hpp"
#include "gra/frame.hpp"
#include "gra/rng.hpp"
#include "gra/types.hpp"

namespace gra {

enum class Role : std::uint8_t { gc = 1, gm = 2 };

struct Capabilities {
  double tx_gain = 20.0;  // dBm
  std::set<Role> roles{Role::gc, Role::gm};

  friend bool operator==(const Capabilities&, const Capabilities&) = default;
};

using GrantToken = std::uint64_t;

struct RegistrationRecord {
  DeviceId device = 0;
  Position location;
  Capabilities capabilities;
  std::optional<DeviceId> registered_via;
  std::optional<GrantToken> grant;
};

struct PropagationMap {
  double residual_mae = 1.0;  // dB
  PathLossModel model;
};

class RegistrationConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AuthorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// In-process geolocation database: registry of sensors, a propagation
/// oracle over the shared link field, and grouping advice.
class GeoDatabase {
 public:
  GeoDatabase(double area_side, PropagationMap map, const LinkField& field);

  /// Stores a direct registration and issues a grant. Re-registering the same
  /// fields returns the existing grant; different fields raise
  /// RegistrationConflict. Locations outside the area are rejected.
  RegistrationRecord register_device(RegistrationRecord record);

  /// A directly registered MASTER registers SLAVE devices on their behalf.
  std::vector<RegistrationRecord> register_on_behalf(DeviceId master,
                                                     std::vector<RegistrationRecord> slaves);

  const RegistrationRecord* find(DeviceId device) const;
  std::size_t size() const { return records_.size(); }
  std::vector<RegistrationRecord> records() const;

  /// Location report from a registered sensor (mobility).
  void update_location(DeviceId device, const Position& location);

  /// True loss between two points with the given frozen shadowing, perturbed
  /// by a fresh Laplace error of scale residual_mae.
  double query_propagation(const Position& a, const Position& b, double shadowing, Rng& rng) const;
  /// Same for two registered devices, using their link's frozen shadowing.
  double query_propagation(DeviceId a, DeviceId b, Rng& rng) const;

  /// CSI view the GDB uses for grouping: frozen residual errors per link.
  FieldCsiTable csi_table(std::span<const Position> positions) const;

  /// Global group update over the registered devices with the GDB's low-error
  /// CSI; devices lacking the GC role are never picked while a capable member
  /// exists.
  Partition advise_grouping(std::span<const RegistrationRecord> registered,
                            const ClusteringConfig& config, Rng& rng,
                            const GcHistory& history = GcHistory{}) const;

  const PropagationMap& map() const { return map_; }

  /// Wire-level entry point: decodes a registration request and answers with
  /// an encoded registration response.
  Bytes handle(std::span<const std::uint8_t> request);

 private:
  bool same_fields(const RegistrationRecord& a, const RegistrationRecord& b) const;
  GrantToken issue_grant(DeviceId device);

  double area_side_;
  PropagationMap map_;
  const LinkField* field_;
  std::map<DeviceId, RegistrationRecord> records_;
  GrantToken next_grant_ = 1;
};

/// Registration message codec (same length-prefixed big-endian conventions as
/// the aggregated frame).
///
///   request   type=1 u8 | body_len u16 | device u32 | x f64 | y f64 | tx_gain f64 | roles u8 | via u32
///   response  type=2 u8 | body_len u16 | device u32 | status u8 | grant u64
namespace gdb_wire {

enum class Status : std::uint8_t { ok = 0, conflict = 1, unauthorized = 2, rejected = 3 };

struct RegistrationResponse {
  DeviceId device = 0;
  Status status = Status::ok;
  GrantToken grant = 0;
  friend bool operator==(const RegistrationResponse&, const RegistrationResponse&) = default;
};

inline constexpr std::uint32_t kNoMaster = 0xffffffffU;

Bytes encode_request(const RegistrationRecord& record);
RegistrationRecord parse_request(std::span<const std::uint8_t> bytes);
Bytes encode_response(const RegistrationResponse& response);
RegistrationResponse parse_response(std::span<const std::uint8_t> bytes);

}  // namespace gdb_wire

}  // namespace gra
