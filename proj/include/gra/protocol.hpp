#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "gra/channel.hpp"
#include "gra/clustering.hpp"
#include "gra/frame.hpp"
#include "gra/rach.hpp"
#include "gra/rng.hpp"

namespace gra {

enum class CyclePhase : std::uint8_t { DA, RA, AUT, G, ADT, DD };

CyclePhase next_phase(CyclePhase phase);
const char* to_string(CyclePhase phase);

struct ProtocolConfig {
  double da = 0.040;
  double ra = 0.005;
  double aut = 0.010;
  double guard = 0.005;
  double adt = 0.010;
  double dd = 0.040;
  std::size_t miss_threshold = 2;
  std::size_t fallback_cycles = 3;
  /// Consecutive collided RA attempts after which the GC's macro link is
  /// declared collapsed.
  std::size_t preamble_trans_max = 10;

  double duration(CyclePhase phase) const;
  double cycle_length() const { return da + ra + aut + guard + adt + dd; }
  friend bool operator==(const ProtocolConfig&, const ProtocolConfig&) = default;
};

void validate(const ProtocolConfig& config);

enum class RaState : std::uint8_t { idle, contending, granted };

struct StagedPayload {
  DeviceId device = 0;
  double arrival = 0.0;
  Bytes payload;
};

/// Per-GM consecutive D2D misses; a link report fires once when a counter
/// reaches the threshold.
using MissCounters = std::map<DeviceId, std::size_t>;

struct GroupCycleState {
  GroupId group_id = 0;
  std::uint32_t cycle_seq = 0;
  CyclePhase phase = CyclePhase::DA;
  double phase_deadline = 0.0;
  std::vector<StagedPayload> aggregated_uplink;
  std::vector<SignalingMessage> pending_signaling;   // uplink, arrival order
  std::vector<SignalingMessage> downlink_signaling;  // acks and commands for the next ADT
  std::vector<DataRecord> downlink_data;
  RaState ra_state = RaState::idle;
  std::size_t ra_failures = 0;
  MissCounters misses;
};

GroupCycleState start_cycle(GroupId group, double now, const ProtocolConfig& config);

/// Link quality oracle used for intra-group transfers.
class D2dLink {
 public:
  virtual ~D2dLink() = default;
  virtual double reliability(DeviceId gm, DeviceId gc, std::size_t group_size) const = 0;
};

/// Same reliability for every link; handy for error-free and severed stubs.
class ConstantLink final : public D2dLink {
 public:
  explicit ConstantLink(double reliability) : reliability_(reliability) {}
  double reliability(DeviceId, DeviceId, std::size_t) const override { return reliability_; }

 private:
  double reliability_;
};

/// What one GM has queued when the aggregation phase closes (possibly nothing;
/// the transmission then doubles as the link keep-alive).
struct GmOffer {
  DeviceId device = 0;
  std::vector<StagedPayload> payloads;
};

struct CycleInputs {
  std::vector<StagedPayload> gc_payloads;
  std::vector<GmOffer> offers;
  std::optional<bool> ra_granted;
};

namespace action {

struct RequestAccess {
  GroupId group;
  double request_epoch;
};
struct D2dResult {
  DeviceId device;
  bool delivered;
};
struct PayloadsReturned {
  DeviceId device;
  std::vector<StagedPayload> payloads;
};
struct UplinkFrame {
  AggregatedFrame frame;
  std::vector<double> arrivals;  // arrival epochs of the carried payloads
};
struct ReserveProcessing {
  GroupId group;
};
struct DownlinkFrame {
  AggregatedFrame frame;
};
struct Distributed {
  DeviceId device;
  bool delivered;
};
struct CycleCompleted {
  GroupId group;
  std::uint32_t cycle_seq;
};
struct MacroLinkCollapse {
  GroupId group;
  std::vector<StagedPayload> stranded;
};

}  // namespace action

using CycleAction =
    std::variant<action::RequestAccess, action::D2dResult, action::PayloadsReturned,
                 action::UplinkFrame, action::ReserveProcessing, action::DownlinkFrame,
                 action::Distributed, action::CycleCompleted, action::MacroLinkCollapse>;

struct CycleStep {
  GroupCycleState state;
  std::vector<CycleAction> actions;
};

/// Closes the current phase of one group's cycle and opens the next.
/// Time-driven phases require now >= phase_deadline; the RA phase is driven by
/// inputs.ra_granted and stalls on collision.
CycleStep advance_cycle(GroupCycleState state, const Group& group, double now,
                        const CycleInputs& inputs, const D2dLink& link, Rng& rng,
                        const ProtocolConfig& config);

/// Staged payloads in ascending device id, then pending uplink signaling.
AggregatedFrame build_uplink_frame(const GroupCycleState& state);

AggregatedFrame build_downlink_frame(GroupId group, std::uint32_t cycle_seq,
                                     const std::vector<SignalingMessage>& acks,
                                     const std::vector<SignalingMessage>& commands,
                                     const std::vector<DataRecord>& payloads);

std::vector<SignalingMessage> detect_d2d_exception(const std::set<DeviceId>& expected,
                                                   const std::set<DeviceId>& received,
                                                   MissCounters& counters,
                                                   std::size_t miss_threshold);

/// Signaling constructors with their detail encodings.
SignalingMessage make_link_report(DeviceId gm, std::size_t misses);
SignalingMessage make_ack(DeviceId subject, SignalingKind acknowledged);
SignalingMessage make_join_command(DeviceId subject, GroupId group, DeviceId gc);
SignalingMessage make_update_command(DeviceId subject, GroupId group, DeviceId gc);

/// Decodes the (group, gc) pair carried by join and update commands.
std::pair<GroupId, DeviceId> command_target(const SignalingMessage& command);

/// BS-side handling of one uplink request or report: the resulting partition
/// and the downlink messages addressed per group.
struct ExceptionOutcome {
  Partition partition;
  std::vector<std::pair<GroupId, SignalingMessage>> downlink;
  bool mutated = false;
};

ExceptionOutcome handle_exception_command(Partition partition, const SignalingMessage& message,
                                          const CsiTable& csi, const GcHistory& history,
                                          const ClusteringConfig& config);

/// Counts consecutive cycles in which a GM got no service; fires once the
/// count reaches fallback_cycles.
class FallbackTracker {
 public:
  explicit FallbackTracker(std::size_t fallback_cycles) : limit_(fallback_cycles) {}

  /// Returns true when the device should fall back to direct access now.
  bool record(DeviceId device, bool served);
  void reset(DeviceId device) { unserved_.erase(device); }
  std::size_t unserved(DeviceId device) const;

 private:
  std::size_t limit_;
  std::map<DeviceId, std::size_t> unserved_;
};

/// One direct RA attempt per pending message of a fallen-back device.
std::vector<RaAttempt> fallback_attempts(DeviceId device, const std::vector<StagedPayload>& pending,
                                         double now);

}  // namespace gra
