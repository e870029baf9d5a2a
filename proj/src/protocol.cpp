#include "gra/protocol.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "gra/diagnostics.hpp"

namespace gra {

CyclePhase next_phase(CyclePhase p) {
  switch (p) {
    case CyclePhase::DA: return CyclePhase::RA;
    case CyclePhase::RA: return CyclePhase::AUT;
    case CyclePhase::AUT: return CyclePhase::G;
    case CyclePhase::G: return CyclePhase::ADT;
    case CyclePhase::ADT: return CyclePhase::DD;
    case CyclePhase::DD: return CyclePhase::DA;
  }
  return CyclePhase::DA;
}

const char* to_string(CyclePhase p) {
  switch (p) {
    case CyclePhase::DA: return "DA";
    case CyclePhase::RA: return "RA";
    case CyclePhase::AUT: return "AUT";
    case CyclePhase::G: return "G";
    case CyclePhase::ADT: return "ADT";
    case CyclePhase::DD: return "DD";
  }
  return "?";
}

double ProtocolConfig::duration(CyclePhase p) const {
  switch (p) {
    case CyclePhase::DA: return da;
    case CyclePhase::RA: return ra;
    case CyclePhase::AUT: return aut;
    case CyclePhase::G: return guard;
    case CyclePhase::ADT: return adt;
    case CyclePhase::DD: return dd;
  }
  return 0.0;
}

void validate(const ProtocolConfig& c) {
  for (double d : {c.da, c.ra, c.aut, c.guard, c.adt, c.dd}) {
    if (!(d > 0.0)) throw ConfigError("protocol: phase durations must be > 0");
  }
  if (c.miss_threshold < 1) throw ConfigError("protocol.miss_threshold: must be >= 1");
  if (c.fallback_cycles < 1) throw ConfigError("protocol.fallback_cycles: must be >= 1");
  if (c.preamble_trans_max < 1) throw ConfigError("protocol.preamble_trans_max: must be >= 1");
}

GroupCycleState start_cycle(GroupId group, double now, const ProtocolConfig& config) {
  GroupCycleState s;
  s.group_id = group;
  s.phase = CyclePhase::DA;
  s.phase_deadline = now + config.da;
  return s;
}

namespace {

void require_deadline(const GroupCycleState& s, double now) {
  // Deadlines are computed by addition; allow for representation error.
  if (now + 1e-12 < s.phase_deadline) {
    throw ProtocolError(fmt::format("group {}: {} advanced at {} before its deadline {}",
                                    s.group_id, to_string(s.phase), now, s.phase_deadline));
  }
}

void require_granted(const GroupCycleState& s) {
  if (s.ra_state != RaState::granted) {
    throw ProtocolError(fmt::format("group {}: {} without granted access", s.group_id,
                                    to_string(s.phase)));
  }
}

bool draw(double reliability, Rng& rng) {
  if (reliability >= 1.0) return true;
  if (reliability <= 0.0) return false;
  return std::bernoulli_distribution(reliability)(rng);
}

}  // namespace

CycleStep advance_cycle(GroupCycleState state, const Group& group, double now,
                        const CycleInputs& inputs, const D2dLink& link, Rng& rng,
                        const ProtocolConfig& config) {
  CycleStep step;
  auto& s = state;
  auto& out = step.actions;

  switch (s.phase) {
    case CyclePhase::DA: {
      require_deadline(s, now);
      for (const auto& p : inputs.gc_payloads) s.aggregated_uplink.push_back(p);

      std::set<DeviceId> expected;
      std::set<DeviceId> received;
      for (DeviceId m : group.members) {
        if (m != group.gc) expected.insert(m);
      }
      for (const auto& offer : inputs.offers) {
        if (!expected.contains(offer.device)) {
          throw ProtocolError(fmt::format("group {}: offer from non-member {}", s.group_id,
                                          offer.device));
        }
        const bool ok = draw(link.reliability(offer.device, group.gc, group.size()), rng);
        out.push_back(action::D2dResult{offer.device, ok});
        if (ok) {
          received.insert(offer.device);
          for (const auto& p : offer.payloads) s.aggregated_uplink.push_back(p);
        } else if (!offer.payloads.empty()) {
          out.push_back(action::PayloadsReturned{offer.device, offer.payloads});
        }
      }
      // GMs that made no offer at all are silent; treat as misses too.
      for (auto& report : detect_d2d_exception(expected, received, s.misses, config.miss_threshold)) {
        s.pending_signaling.push_back(std::move(report));
      }
      s.phase = CyclePhase::RA;
      s.ra_state = RaState::contending;
      s.ra_failures = 0;
      s.phase_deadline = now;
      out.push_back(action::RequestAccess{s.group_id, now});
      break;
    }
    case CyclePhase::RA: {
      if (!inputs.ra_granted.has_value()) {
        throw ProtocolError(fmt::format("group {}: RA phase advanced without an outcome", s.group_id));
      }
      if (*inputs.ra_granted) {
        s.ra_state = RaState::granted;
        s.phase = CyclePhase::AUT;
        s.phase_deadline = now + config.aut;
        break;
      }
      ++s.ra_failures;
      if (s.ra_failures >= config.preamble_trans_max) {
        out.push_back(action::MacroLinkCollapse{s.group_id, std::move(s.aggregated_uplink)});
        s.aggregated_uplink.clear();
        s.ra_state = RaState::idle;
        break;
      }
      out.push_back(action::RequestAccess{s.group_id, now});
      break;
    }
    case CyclePhase::AUT: {
      require_deadline(s, now);
      require_granted(s);
      action::UplinkFrame up{build_uplink_frame(s), {}};
      for (const auto& p : s.aggregated_uplink) up.arrivals.push_back(p.arrival);
      out.push_back(std::move(up));
      s.aggregated_uplink.clear();
      s.pending_signaling.clear();
      s.phase = CyclePhase::G;
      s.phase_deadline = now + config.guard;
      break;
    }
    case CyclePhase::G: {
      require_deadline(s, now);
      out.push_back(action::ReserveProcessing{s.group_id});
      s.phase = CyclePhase::ADT;
      s.phase_deadline = now + config.adt;
      break;
    }
    case CyclePhase::ADT: {
      require_deadline(s, now);
      require_granted(s);
      std::vector<SignalingMessage> acks;
      std::vector<SignalingMessage> commands;
      for (auto& m : s.downlink_signaling) {
        (m.kind == SignalingKind::ack ? acks : commands).push_back(std::move(m));
      }
      out.push_back(action::DownlinkFrame{
          build_downlink_frame(s.group_id, s.cycle_seq, acks, commands, s.downlink_data)});
      s.downlink_signaling.clear();
      s.phase = CyclePhase::DD;
      s.phase_deadline = now + config.dd;
      break;
    }
    case CyclePhase::DD: {
      require_deadline(s, now);
      for (const auto& d : s.downlink_data) {
        if (d.device == group.gc) continue;
        const bool ok = draw(link.reliability(d.device, group.gc, group.size()), rng);
        out.push_back(action::Distributed{d.device, ok});
      }
      s.downlink_data.clear();
      out.push_back(action::CycleCompleted{s.group_id, s.cycle_seq});
      ++s.cycle_seq;
      s.ra_state = RaState::idle;
      s.ra_failures = 0;
      s.phase = CyclePhase::DA;
      s.phase_deadline = now + config.da;
      break;
    }
  }
  step.state = std::move(state);
  return step;
}

AggregatedFrame build_uplink_frame(const GroupCycleState& state) {
  AggregatedFrame f;
  f.group_id = state.group_id;
  f.cycle_seq = state.cycle_seq;
  f.direction = Direction::uplink;
  std::vector<const StagedPayload*> order;
  order.reserve(state.aggregated_uplink.size());
  for (const auto& p : state.aggregated_uplink) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const StagedPayload* a, const StagedPayload* b) { return a->device < b->device; });
  for (const auto* p : order) f.data.push_back({p->device, p->payload});
  f.signaling = state.pending_signaling;
  return f;
}

AggregatedFrame build_downlink_frame(GroupId group, std::uint32_t cycle_seq,
                                     const std::vector<SignalingMessage>& acks,
                                     const std::vector<SignalingMessage>& commands,
                                     const std::vector<DataRecord>& payloads) {
  AggregatedFrame f;
  f.group_id = group;
  f.cycle_seq = cycle_seq;
  f.direction = Direction::downlink;
  f.signaling = acks;
  f.signaling.insert(f.signaling.end(), commands.begin(), commands.end());
  f.data = payloads;
  return f;
}

std::vector<SignalingMessage> detect_d2d_exception(const std::set<DeviceId>& expected,
                                                   const std::set<DeviceId>& received,
                                                   MissCounters& counters,
                                                   std::size_t miss_threshold) {
  std::vector<SignalingMessage> reports;
  for (DeviceId gm : expected) {
    if (received.contains(gm)) {
      counters.erase(gm);
      continue;
    }
    const auto misses = ++counters[gm];
    if (misses == miss_threshold) reports.push_back(make_link_report(gm, misses));
  }
  // Counters of devices no longer expected (left the group) are dropped.
  std::erase_if(counters, [&](const auto& kv) { return !expected.contains(kv.first); });
  return reports;
}

SignalingMessage make_link_report(DeviceId gm, std::size_t misses) {
  return {SignalingKind::link_report, gm,
          Bytes{static_cast<std::uint8_t>(std::min<std::size_t>(misses, 255))}};
}

SignalingMessage make_ack(DeviceId subject, SignalingKind acknowledged) {
  return {SignalingKind::ack, subject, Bytes{static_cast<std::uint8_t>(acknowledged)}};
}

namespace {

SignalingMessage make_target_command(SignalingKind kind, DeviceId subject, GroupId group,
                                     DeviceId gc) {
  SignalingMessage m{kind, subject, {}};
  wire::put_u32(m.detail, group);
  wire::put_u32(m.detail, gc);
  return m;
}

}  // namespace

SignalingMessage make_join_command(DeviceId subject, GroupId group, DeviceId gc) {
  return make_target_command(SignalingKind::join_command, subject, group, gc);
}

SignalingMessage make_update_command(DeviceId subject, GroupId group, DeviceId gc) {
  return make_target_command(SignalingKind::update_command, subject, group, gc);
}

std::pair<GroupId, DeviceId> command_target(const SignalingMessage& command) {
  wire::Reader in(command.detail);
  const auto group = in.u32("command.group");
  const auto gc = in.u32("command.gc");
  return {group, gc};
}

ExceptionOutcome handle_exception_command(Partition partition, const SignalingMessage& message,
                                          const CsiTable& csi, const GcHistory& history,
                                          const ClusteringConfig& config) {
  ExceptionOutcome outcome;
  const Group* home = partition.find_group_of(message.subject);
  const bool unclustered = partition.unclustered.contains(message.subject);

  switch (message.kind) {
    case SignalingKind::link_report:
    case SignalingKind::leave_request: {
      if (home == nullptr) {
        warn(fmt::format("{} for unknown device {}", to_string(message.kind), message.subject));
        outcome.partition = std::move(partition);
        return outcome;
      }
      const GroupId old_group = home->id;
      partition = group_leave(message.subject, std::move(partition), csi, history, config);
      outcome.downlink.emplace_back(old_group, make_ack(message.subject, message.kind));
      if (message.kind == SignalingKind::link_report) {
        partition = group_join(message.subject, std::move(partition), csi, history, config, old_group);
        const Group* target = partition.find_group_of(message.subject);
        outcome.downlink.emplace_back(target->id,
                                      make_join_command(message.subject, target->id, target->gc));
      }
      outcome.mutated = true;
      break;
    }
    case SignalingKind::join_request: {
      if (!unclustered) {
        warn(fmt::format("join_request for device {} which is not unclustered", message.subject));
        outcome.partition = std::move(partition);
        return outcome;
      }
      partition = group_join(message.subject, std::move(partition), csi, history, config);
      const Group* target = partition.find_group_of(message.subject);
      outcome.downlink.emplace_back(target->id,
                                    make_join_command(message.subject, target->id, target->gc));
      outcome.mutated = true;
      break;
    }
    default:
      warn(fmt::format("{} is not an uplink request", to_string(message.kind)));
      break;
  }
  outcome.partition = std::move(partition);
  return outcome;
}

bool FallbackTracker::record(DeviceId device, bool served) {
  if (served) {
    unserved_.erase(device);
    return false;
  }
  return ++unserved_[device] == limit_;
}

std::size_t FallbackTracker::unserved(DeviceId device) const {
  const auto it = unserved_.find(device);
  return it == unserved_.end() ? 0 : it->second;
}

std::vector<RaAttempt> fallback_attempts(DeviceId device, const std::vector<StagedPayload>& pending,
                                         double now) {
  std::vector<RaAttempt> attempts;
  attempts.reserve(pending.size());
  for (const auto& p : pending) {
    attempts.push_back({{Requester::Kind::device, device}, p.arrival, now, 0});
  }
  return attempts;
}

}  // namespace gra
