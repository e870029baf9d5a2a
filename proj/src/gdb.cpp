#include "gra/gdb.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace gra {

namespace {

constexpr std::uint64_t kGdbEstimator = 0x6db;

}  // namespace

GeoDatabase::GeoDatabase(double area_side, PropagationMap map, const LinkField& field)
    : area_side_(area_side), map_(std::move(map)), field_(&field) {
  if (map_.residual_mae < 0.0) throw ConfigError("gdb.residual_mae: must be >= 0");
}

bool GeoDatabase::same_fields(const RegistrationRecord& a, const RegistrationRecord& b) const {
  return a.device == b.device && a.location == b.location && a.capabilities == b.capabilities &&
         a.registered_via == b.registered_via;
}

GrantToken GeoDatabase::issue_grant(DeviceId device) {
  return mix64((next_grant_++ << 32) ^ device);
}

RegistrationRecord GeoDatabase::register_device(RegistrationRecord record) {
  const auto& p = record.location;
  if (p.x < 0.0 || p.y < 0.0 || p.x > area_side_ || p.y > area_side_) {
    throw std::invalid_argument(fmt::format("device {} registers outside the service area",
                                            record.device));
  }
  if (const auto it = records_.find(record.device); it != records_.end()) {
    if (same_fields(it->second, record)) return it->second;
    throw RegistrationConflict(fmt::format("device {} already registered with different fields",
                                           record.device));
  }
  record.grant = issue_grant(record.device);
  records_.emplace(record.device, record);
  return record;
}

std::vector<RegistrationRecord> GeoDatabase::register_on_behalf(
    DeviceId master, std::vector<RegistrationRecord> slaves) {
  const auto* m = find(master);
  // The BS is the top of the hierarchy, the directly registered GC the middle
  // level and its GMs the third; a slave cannot register further slaves.
  if (m == nullptr) {
    throw AuthorizationError(fmt::format("master {} is not registered", master));
  }
  if (m->registered_via) {
    throw AuthorizationError(fmt::format("master {} did not register directly", master));
  }
  std::vector<RegistrationRecord> granted;
  granted.reserve(slaves.size());
  // Validate all before storing any, so a failed batch leaves no partial state.
  for (auto& s : slaves) {
    s.registered_via = master;
    if (const auto it = records_.find(s.device); it != records_.end() && !same_fields(it->second, s)) {
      throw RegistrationConflict(fmt::format("device {} already registered with different fields",
                                             s.device));
    }
  }
  for (auto& s : slaves) granted.push_back(register_device(std::move(s)));
  return granted;
}

const RegistrationRecord* GeoDatabase::find(DeviceId device) const {
  const auto it = records_.find(device);
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<RegistrationRecord> GeoDatabase::records() const {
  std::vector<RegistrationRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, r] : records_) out.push_back(r);
  return out;
}

void GeoDatabase::update_location(DeviceId device, const Position& location) {
  const auto it = records_.find(device);
  if (it == records_.end()) throw std::out_of_range(fmt::format("device {} not registered", device));
  it->second.location = location;
}

double GeoDatabase::query_propagation(const Position& a, const Position& b, double shadowing,
                                      Rng& rng) const {
  return path_loss(map_.model, distance(a, b), shadowing) + draw_laplace(rng, map_.residual_mae);
}

double GeoDatabase::query_propagation(DeviceId a, DeviceId b, Rng& rng) const {
  const auto* ra = find(a);
  const auto* rb = find(b);
  if (ra == nullptr || rb == nullptr) {
    throw std::out_of_range(fmt::format("propagation query for unregistered pair {}-{}", a, b));
  }
  return query_propagation(ra->location, rb->location, field_->shadowing(a, b), rng);
}

FieldCsiTable GeoDatabase::csi_table(std::span<const Position> positions) const {
  return FieldCsiTable(*field_, positions, map_.residual_mae, kGdbEstimator);
}

Partition GeoDatabase::advise_grouping(std::span<const RegistrationRecord> registered,
                                       const ClusteringConfig& config, Rng& rng,
                                       const GcHistory& history) const {
  std::vector<DeviceProfile> devices;
  devices.reserve(registered.size());
  DeviceId max_id = 0;
  for (const auto& r : registered) {
    const auto* stored = find(r.device);
    if (stored == nullptr) {
      throw std::out_of_range(fmt::format("advise_grouping: device {} not registered", r.device));
    }
    DeviceProfile d;
    d.id = r.device;
    d.position = stored->location;
    devices.push_back(d);
    max_id = std::max(max_id, r.device);
  }
  std::vector<Position> positions(registered.empty() ? 0 : max_id + 1);
  for (const auto& d : devices) positions[d.id] = d.position;

  ClusteringConfig advised = config;
  advised.gc_capable = [this](DeviceId d) {
    const auto* r = find(d);
    return r != nullptr && r->capabilities.roles.contains(Role::gc);
  };
  const auto csi = csi_table(positions);
  return global_group_update(devices, csi, advised, history, rng);
}

Bytes GeoDatabase::handle(std::span<const std::uint8_t> request) {
  gdb_wire::RegistrationResponse response;
  RegistrationRecord record;
  try {
    record = gdb_wire::parse_request(request);
  } catch (const FrameParseError&) {
    response.status = gdb_wire::Status::rejected;
    return gdb_wire::encode_response(response);
  }
  response.device = record.device;
  try {
    const auto granted = record.registered_via
                             ? register_on_behalf(*record.registered_via, {record}).front()
                             : register_device(record);
    response.grant = *granted.grant;
  } catch (const RegistrationConflict&) {
    response.status = gdb_wire::Status::conflict;
  } catch (const AuthorizationError&) {
    response.status = gdb_wire::Status::unauthorized;
  } catch (const std::invalid_argument&) {
    response.status = gdb_wire::Status::rejected;
  }
  return gdb_wire::encode_response(response);
}

namespace gdb_wire {

namespace {

constexpr std::uint8_t kRequestType = 1;
constexpr std::uint8_t kResponseType = 2;
constexpr std::uint16_t kRequestBody = 33;
constexpr std::uint16_t kResponseBody = 13;

std::uint8_t role_bits(const std::set<Role>& roles) {
  std::uint8_t bits = 0;
  for (Role r : roles) bits |= static_cast<std::uint8_t>(r);
  return bits;
}

void expect_header(wire::Reader& in, std::uint8_t type, std::uint16_t body) {
  const auto at = in.offset();
  if (in.u8("message.type") != type) throw FrameParseError(at, "unexpected message type");
  const auto len_at = in.offset();
  if (in.u16("message.body_len") != body) throw FrameParseError(len_at, "unexpected body length");
  if (in.remaining() != body) {
    throw FrameParseError(in.offset(), fmt::format("body holds {} bytes, declared {}",
                                                   in.remaining(), body));
  }
}

}  // namespace

Bytes encode_request(const RegistrationRecord& r) {
  Bytes out;
  wire::put_u8(out, kRequestType);
  wire::put_u16(out, kRequestBody);
  wire::put_u32(out, r.device);
  wire::put_f64(out, r.location.x);
  wire::put_f64(out, r.location.y);
  wire::put_f64(out, r.capabilities.tx_gain);
  wire::put_u8(out, role_bits(r.capabilities.roles));
  wire::put_u32(out, r.registered_via.value_or(kNoMaster));
  return out;
}

RegistrationRecord parse_request(std::span<const std::uint8_t> bytes) {
  wire::Reader in(bytes);
  expect_header(in, kRequestType, kRequestBody);
  RegistrationRecord r;
  r.device = in.u32("request.device");
  r.location.x = in.f64("request.x");
  r.location.y = in.f64("request.y");
  r.capabilities.tx_gain = in.f64("request.tx_gain");
  const auto roles_at = in.offset();
  const auto bits = in.u8("request.roles");
  if (bits & ~0x3U) throw FrameParseError(roles_at, "unknown role bits");
  r.capabilities.roles.clear();
  if (bits & static_cast<std::uint8_t>(Role::gc)) r.capabilities.roles.insert(Role::gc);
  if (bits & static_cast<std::uint8_t>(Role::gm)) r.capabilities.roles.insert(Role::gm);
  const auto via = in.u32("request.via");
  if (via != kNoMaster) r.registered_via = via;
  return r;
}

Bytes encode_response(const RegistrationResponse& r) {
  Bytes out;
  wire::put_u8(out, kResponseType);
  wire::put_u16(out, kResponseBody);
  wire::put_u32(out, r.device);
  wire::put_u8(out, static_cast<std::uint8_t>(r.status));
  wire::put_u64(out, r.grant);
  return out;
}

RegistrationResponse parse_response(std::span<const std::uint8_t> bytes) {
  wire::Reader in(bytes);
  expect_header(in, kResponseType, kResponseBody);
  RegistrationResponse r;
  r.device = in.u32("response.device");
  const auto status_at = in.offset();
  const auto status = in.u8("response.status");
  if (status > 3) throw FrameParseError(status_at, "unknown status");
  r.status = static_cast<Status>(status);
  r.grant = in.u64("response.grant");
  return r;
}

}  // namespace gdb_wire

}  // namespace gra
