#include "gra/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <variant>

#include <fmt/format.h>

#include "gra/channel.hpp"
#include "gra/rng.hpp"
#include "gra/studies.hpp"

namespace gra {

const char* to_string(Mode mode) {
  return mode == Mode::eab ? "eab" : "grouped-ra";
}

Mode parse_mode(std::string_view text) {
  if (text == "eab") return Mode::eab;
  if (text == "grouped-ra" || text == "grouped_ra") return Mode::grouped_ra;
  throw ConfigError(fmt::format("unknown mode '{}'", text));
}

const char* to_string(SweepVariable variable) {
  switch (variable) {
    case SweepVariable::device_count: return "device_count";
    case SweepVariable::group_size_cap: return "group_size_cap";
    case SweepVariable::csi_mae: return "csi_mae";
  }
  return "?";
}

void EventQueue::push(double epoch, EventKind kind, std::uint64_t subject, std::uint64_t tag) {
  heap_.push(Event{epoch, next_sequence_++, kind, subject, tag});
}

Event EventQueue::pop() {
  Event e = heap_.top();
  heap_.pop();
  return e;
}

void SampleStats::add(double v) {
  ++count;
  sum += v;
  max = std::max(max, v);
}

double MetricsReport::mean_delay() const {
  if (delays.empty()) return 0.0;
  double s = 0.0;
  for (double d : delays) s += d;
  return s / static_cast<double>(delays.size());
}

double MetricsReport::ull_mean_delay() const {
  SampleStats ull;
  for (int ac = 0; ac < kAccessClassCount; ++ac) {
    if (!is_ull(ac)) continue;
    ull.count += delay_by_ac[ac].count;
    ull.sum += delay_by_ac[ac].sum;
  }
  return ull.mean();
}

double MetricsReport::collision_rate() const {
  return preamble_transmissions
             ? static_cast<double>(collisions) / static_cast<double>(preamble_transmissions)
             : 0.0;
}

std::vector<std::pair<std::string, double>> MetricsReport::scalars() const {
  auto d = [](std::size_t v) { return static_cast<double>(v); };
  double access_sum = 0.0;
  for (double a : access_delays) access_sum += a;
  const double access_mean =
      access_delays.empty() ? 0.0 : access_sum / static_cast<double>(access_delays.size());
  return {
      {"mean_delay", mean_delay()},
      {"censored_mean_delay", censored.mean()},
      {"ull_mean_delay", ull_mean_delay()},
      {"mean_access_delay", access_mean},
      {"delay_samples", d(delays.size())},
      {"arrivals", d(arrivals)},
      {"delivered", d(delivered)},
      {"failed", d(failed)},
      {"pending", d(pending)},
      {"ra_requests", d(ra_requests)},
      {"direct_ra_requests", d(direct_ra_requests)},
      {"preamble_transmissions", d(preamble_transmissions)},
      {"collisions", d(collisions)},
      {"collision_rate", collision_rate()},
      {"barred", d(barred)},
      {"d2d_success", d(d2d_success)},
      {"d2d_failure", d(d2d_failure)},
      {"mean_d2d_per", mean_d2d_per},
      {"worst_d2d_per", worst_d2d_per},
      {"mean_d2d_reliability", mean_d2d_reliability},
      {"uplink_bytes", d(uplink_bytes)},
      {"uplink_signaling_bytes", d(uplink_signaling_bytes)},
      {"downlink_bytes", d(downlink_bytes)},
      {"downlink_signaling_bytes", d(downlink_signaling_bytes)},
      {"link_reports", d(link_reports)},
      {"fallbacks", d(fallbacks)},
      {"macro_collapses", d(macro_collapses)},
      {"final_groups", group_count.empty() ? 0.0 : d(group_count.back().second)},
  };
}

namespace {

/// Intra-group links over the true propagation field at current positions.
class FieldLink final : public D2dLink {
 public:
  explicit FieldLink(const World& world) : world_(&world) {}
  double reliability(DeviceId gm, DeviceId gc, std::size_t group_size) const override {
    const auto& ch = world_->config.channel;
    const double per =
        packet_error_rate(snr(ch.budget, world_->true_loss(gm, gc)), world_->config.scenario.payload);
    return d2d_link_reliability(per, ch.d2d, group_size);
  }

 private:
  const World* world_;
};

struct DirectAccess {
  DeviceId device = 0;
  double request_epoch = 0.0;
  std::vector<StagedPayload> payloads;
};

struct SlotEntry {
  enum class Kind : std::uint8_t { direct, group } kind;
  std::uint64_t ref;  // access index or group id
  double request_epoch;
};

struct GroupRuntime {
  GroupCycleState state;
  Group members;  // membership this cycle runs with
  bool retiring = false;
  std::uint64_t generation = 0;
  double request_epoch = 0.0;
  double cycle_start = 0.0;
};

class Simulation {
 public:
  Simulation(const SimConfig& config, Mode mode, std::uint64_t seed, const RunOptions& options)
      : cfg_(config),
        mode_(mode),
        world_(config, seed),
        field_link_(world_),
        link_(options.link_override ? options.link_override : &field_link_),
        arrivals_rng_(make_stream(seed, Stream::arrivals)),
        mobility_rng_(make_stream(seed, Stream::mobility)),
        clustering_rng_(make_stream(seed, Stream::clustering)),
        rach_rng_(make_stream(seed, Stream::rach)),
        protocol_rng_(make_stream(seed, Stream::protocol)),
        tracker_(config.protocol.fallback_cycles),
        pending_(config.scenario.device_count) {
    report_.seed = seed;
    report_.mode = mode;
    report_.device_count = config.scenario.device_count;
  }

  MetricsReport run() {
    const double horizon = cfg_.engine.horizon;
    schedule_arrivals(horizon);
    if (cfg_.scenario.mobile_fraction > 0.0) {
      queue_.push(cfg_.engine.mobility_step, EventKind::mobility_tick);
    }
    if (mode_ == Mode::grouped_ra) start_grouping();

    while (!queue_.empty() && queue_.top().epoch < horizon) {
      const Event e = queue_.pop();
      dispatch(e);
    }
    finish(horizon);
    return std::move(report_);
  }

 private:
  // ---- setup -------------------------------------------------------------

  void schedule_arrivals(double horizon) {
    const double phase = cfg_.scenario.synchronized ? 0.0 : -1.0;
    for (const auto& d : world_.devices) {
      for (double t : draw_arrivals(d, horizon, arrivals_rng_, phase)) {
        queue_.push(t, EventKind::arrival, d.id);
      }
    }
  }

  void start_grouping() {
    partition_ = world_.group(clustering_rng_, history_);
    const auto q = partition_link_quality(partition_, world_);
    report_.mean_d2d_per = q.mean_per;
    report_.worst_d2d_per = q.worst_per;
    report_.mean_d2d_reliability = q.mean_reliability;
    for (const auto& g : partition_.groups) launch_group(g, 0.0);
    note_group_count(0.0);
    if (cfg_.engine.update_interval > 0.0) {
      queue_.push(cfg_.engine.update_interval, EventKind::global_update_tick);
    }
  }

  /// New groups start their first cycle at a random offset so that their RA
  /// requests do not all land in one slot.
  void launch_group(const Group& g, double now) {
    std::uniform_real_distribution<double> offset(0.0, cfg_.protocol.cycle_length());
    const double start = now + offset(protocol_rng_);
    GroupRuntime rt;
    rt.state = start_cycle(g.id, start, cfg_.protocol);
    rt.members = g;
    rt.cycle_start = start;
    rt.generation = next_generation_++;
    queue_.push(rt.state.phase_deadline, EventKind::phase_deadline, g.id, rt.generation);
    report_.groups[g.id];
    runtimes_[g.id] = std::move(rt);
  }

  void note_group_count(double now) {
    report_.group_count.emplace_back(now, partition_.groups.size());
  }

  // ---- dispatch ----------------------------------------------------------

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::arrival: on_arrival(static_cast<DeviceId>(e.subject), e.epoch); break;
      case EventKind::rach_slot: on_slot(static_cast<std::int64_t>(e.subject), e.epoch); break;
      case EventKind::sib_broadcast: gate(e.subject, e.epoch); break;
      case EventKind::backoff_expiry:
        queue_.push(next_sib_epoch(e.epoch, cfg_.eab), EventKind::sib_broadcast, e.subject);
        break;
      case EventKind::phase_deadline: on_deadline(static_cast<GroupId>(e.subject), e.tag, e.epoch); break;
      case EventKind::mobility_tick: on_mobility(e.epoch); break;
      case EventKind::global_update_tick: on_global_update(e.epoch); break;
    }
  }

  void on_arrival(DeviceId device, double now) {
    ++report_.arrivals;
    StagedPayload p{device, now, Bytes(world_.devices[device].traffic.payload, 0)};
    if (mode_ == Mode::eab) {
      const auto idx = open_access(device, now, {std::move(p)});
      gate(idx, now);
      return;
    }
    if (partition_.unclustered.contains(device)) {
      const auto idx = open_access(device, now, {std::move(p)});
      enqueue(SlotEntry{SlotEntry::Kind::direct, idx, now}, now);
      return;
    }
    pending_[device].push_back(std::move(p));
  }

  std::uint64_t open_access(DeviceId device, double now, std::vector<StagedPayload> payloads) {
    accesses_.push_back(DirectAccess{device, now, std::move(payloads)});
    ++report_.ra_requests;
    ++report_.direct_ra_requests;
    return accesses_.size() - 1;
  }

  void gate(std::uint64_t access, double now) {
    const auto& a = accesses_[access];
    const auto decision = eab_gate(world_.devices[a.device].access_class, cfg_.eab, rach_rng_);
    if (decision.pass) {
      enqueue(SlotEntry{SlotEntry::Kind::direct, access, a.request_epoch}, now);
      return;
    }
    ++report_.barred;
    queue_.push(now + decision.backoff, EventKind::backoff_expiry, access);
  }

  /// Places an attempt in the first RACH slot strictly after `now`.
  void enqueue(const SlotEntry& entry, double now) {
    const double L = cfg_.rach.slot_length;
    const auto k = static_cast<std::int64_t>(std::llround(next_slot_epoch(now, cfg_.rach) / L));
    auto& slot = slots_[k];
    if (slot.empty()) {
      queue_.push(static_cast<double>(k + 1) * L, EventKind::rach_slot, static_cast<std::uint64_t>(k));
    }
    slot.push_back(entry);
  }

  void on_slot(std::int64_t k, double now) {
    auto node = slots_.extract(k);
    auto& entries = node.mapped();
    const double start = static_cast<double>(k) * cfg_.rach.slot_length;
    std::vector<RaAttempt> attempts;
    attempts.reserve(entries.size());
    for (const auto& e : entries) {
      const auto kind = e.kind == SlotEntry::Kind::group ? Requester::Kind::group : Requester::Kind::device;
      attempts.push_back(RaAttempt{{kind, static_cast<std::uint32_t>(e.ref)}, e.request_epoch, start, 0});
    }
    const auto outcomes = resolve_slot(attempts, cfg_.rach, rach_rng_);
    report_.preamble_transmissions += entries.size();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const bool ok = outcomes[i] == SlotOutcome::success;
      if (!ok) ++report_.collisions;
      if (entries[i].kind == SlotEntry::Kind::direct) {
        if (ok) {
          grant_direct(entries[i].ref, now);
        } else {
          enqueue(entries[i], now + uniform_backoff(cfg_.rach.retry_backoff, rach_rng_));
        }
      } else {
        ra_outcome(static_cast<GroupId>(entries[i].ref), ok, now);
      }
    }
  }

  void record_delivery(const StagedPayload& p, double now) {
    const double delay = now - p.arrival;
    report_.delays.push_back(delay);
    report_.delay_by_ac[world_.devices[p.device].access_class].add(delay);
    report_.censored.add(delay);
    ++report_.delivered;
  }

  void grant_direct(std::uint64_t idx, double now) {
    auto& a = accesses_[idx];
    report_.access_delays.push_back(now - a.request_epoch);
    for (const auto& p : a.payloads) record_delivery(p, now);
    a.payloads.clear();
    a.payloads.shrink_to_fit();
    if (mode_ == Mode::grouped_ra && partition_.unclustered.contains(a.device)) {
      rejoin(a.device, now);
    }
  }

  // ---- grouped RA --------------------------------------------------------

  ClusteringConfig clustering() const { return cfg_.clustering_config(); }

  /// Creates runtimes for partition groups that have none (joins can open
  /// singleton groups).
  void ensure_runtimes(double now) {
    for (const auto& g : partition_.groups) {
      if (!runtimes_.contains(g.id)) launch_group(g, now);
    }
  }

  void rejoin(DeviceId device, double now) {
    partition_ = group_join(device, std::move(partition_), world_.csi, history_, clustering());
    ensure_runtimes(now);
    const auto* g = partition_.find_group_of(device);
    if (g != nullptr) {
      runtimes_[g->id].state.downlink_signaling.push_back(make_join_command(device, g->id, g->gc));
    }
  }

  std::vector<StagedPayload> take_pending(DeviceId d) {
    auto& q = pending_[d];
    std::vector<StagedPayload> out(std::make_move_iterator(q.begin()), std::make_move_iterator(q.end()));
    q.clear();
    return out;
  }

  void give_back(DeviceId d, std::vector<StagedPayload> payloads) {
    auto& q = pending_[d];
    q.insert(q.begin(), std::make_move_iterator(payloads.begin()), std::make_move_iterator(payloads.end()));
  }

  void on_deadline(GroupId id, std::uint64_t generation, double now) {
    auto it = runtimes_.find(id);
    if (it == runtimes_.end() || it->second.generation != generation) return;
    auto& rt = it->second;
    CycleInputs in;
    if (rt.state.phase == CyclePhase::DA) {
      if (!rt.retiring) {
        if (const auto* g = partition_.find_group(id)) {
          rt.members = *g;
        } else {
          rt.retiring = true;
        }
      }
      in.gc_payloads = take_pending(rt.members.gc);
      for (DeviceId m : rt.members.members) {
        if (m != rt.members.gc) in.offers.push_back(GmOffer{m, take_pending(m)});
      }
    }
    step(rt, in, now);
  }

  void ra_outcome(GroupId id, bool granted, double now) {
    auto it = runtimes_.find(id);
    if (it == runtimes_.end() || it->second.state.phase != CyclePhase::RA) return;
    auto& rt = it->second;
    if (granted) {
      report_.access_delays.push_back(now - rt.request_epoch);
      for (const auto& p : rt.state.aggregated_uplink) record_delivery(p, now);
    }
    CycleInputs in;
    in.ra_granted = granted;
    step(rt, in, now);
  }

  void step(GroupRuntime& rt, const CycleInputs& in, double now) {
    const GroupId id = rt.state.group_id;
    auto result = advance_cycle(std::move(rt.state), rt.members, now, in, *link_, protocol_rng_, cfg_.protocol);
    rt.state = std::move(result.state);

    std::vector<DeviceId> fallen;
    bool finished = false;
    bool collapsed = false;
    for (auto& a : result.actions) {
      std::visit(
          [&](auto& act) {
            using T = std::decay_t<decltype(act)>;
            if constexpr (std::is_same_v<T, action::RequestAccess>) {
              if (rt.state.ra_failures == 0) {
                rt.request_epoch = act.request_epoch;
                ++report_.ra_requests;
                ++report_.groups[id].ra_requests;
                enqueue(SlotEntry{SlotEntry::Kind::group, id, rt.request_epoch}, now);
              } else {
                enqueue(SlotEntry{SlotEntry::Kind::group, id, rt.request_epoch},
                        now + uniform_backoff(cfg_.rach.retry_backoff, rach_rng_));
              }
            } else if constexpr (std::is_same_v<T, action::D2dResult>) {
              ++(act.delivered ? report_.d2d_success : report_.d2d_failure);
              if (tracker_.record(act.device, act.delivered)) fallen.push_back(act.device);
            } else if constexpr (std::is_same_v<T, action::PayloadsReturned>) {
              give_back(act.device, std::move(act.payloads));
            } else if constexpr (std::is_same_v<T, action::UplinkFrame>) {
              ++report_.uplink_frames;
              report_.uplink_bytes += act.frame.encoded_size();
              report_.uplink_signaling_bytes += act.frame.signaling_bytes();
              for (const auto& m : act.frame.signaling) serve_signaling(m, now);
            } else if constexpr (std::is_same_v<T, action::DownlinkFrame>) {
              ++report_.downlink_frames;
              report_.downlink_bytes += act.frame.encoded_size();
              report_.downlink_signaling_bytes += act.frame.signaling_bytes();
            } else if constexpr (std::is_same_v<T, action::Distributed>) {
              ++(act.delivered ? report_.distribution_success : report_.distribution_failure);
            } else if constexpr (std::is_same_v<T, action::CycleCompleted>) {
              ++report_.groups[id].cycles_completed;
              history_.add(rt.members.gc, now - rt.cycle_start);
              rt.cycle_start = now;
              finished = true;
            } else if constexpr (std::is_same_v<T, action::MacroLinkCollapse>) {
              ++report_.macro_collapses;
              for (auto& p : act.stranded) pending_[p.device].push_back(std::move(p));
              collapsed = true;
            } else if constexpr (std::is_same_v<T, action::ReserveProcessing>) {
            }
          },
          a);
    }

    // Stranded payloads went back to the tail; restore arrival order.
    if (collapsed) {
      for (DeviceId m : rt.members.members) {
        auto& q = pending_[m];
        std::stable_sort(q.begin(), q.end(),
                         [](const StagedPayload& a, const StagedPayload& b) { return a.arrival < b.arrival; });
      }
    }

    for (DeviceId d : fallen) fall_back(d, now);

    auto it = runtimes_.find(id);
    if (it == runtimes_.end()) return;
    auto& cur = it->second;
    if (collapsed) {
      const DeviceId gc = cur.members.gc;
      const bool keep = !cur.retiring && partition_.find_group(id) != nullptr;
      const auto* home = partition_.find_group_of(gc);
      if (home != nullptr && home->id == id) {
        partition_ = group_leave(gc, std::move(partition_), world_.csi, history_, clustering());
        send_direct(gc, now);
      }
      if (keep && partition_.find_group(id) != nullptr) {
        const auto seq = cur.state.cycle_seq;
        cur.state = start_cycle(id, now, cfg_.protocol);
        cur.state.cycle_seq = seq;
        cur.cycle_start = now;
        cur.generation = next_generation_++;
        queue_.push(cur.state.phase_deadline, EventKind::phase_deadline, id, cur.generation);
      } else {
        runtimes_.erase(it);
      }
      return;
    }
    if (finished && (cur.retiring || partition_.find_group(id) == nullptr)) {
      runtimes_.erase(it);
      return;
    }
    if (cur.state.phase != CyclePhase::RA) {
      queue_.push(cur.state.phase_deadline, EventKind::phase_deadline, id, cur.generation);
    }
  }

  /// BS handling of uplink signaling; replies queue for the next ADT of the
  /// addressed group.
  void serve_signaling(const SignalingMessage& m, double now) {
    if (m.kind == SignalingKind::link_report) ++report_.link_reports;
    auto outcome = handle_exception_command(std::move(partition_), m, world_.csi, history_, clustering());
    partition_ = std::move(outcome.partition);
    if (outcome.mutated) {
      tracker_.reset(m.subject);
      ensure_runtimes(now);
    }
    for (auto& [gid, reply] : outcome.downlink) {
      auto it = runtimes_.find(gid);
      if (it != runtimes_.end()) it->second.state.downlink_signaling.push_back(std::move(reply));
    }
  }

  void fall_back(DeviceId d, double now) {
    ++report_.fallbacks;
    tracker_.reset(d);
    if (partition_.find_group_of(d) != nullptr) {
      partition_ = group_leave(d, std::move(partition_), world_.csi, history_, clustering());
    }
    send_direct(d, now);
  }

  /// Moves a now-unclustered device's backlog onto direct RA, one request
  /// per queued message.
  void send_direct(DeviceId d, double now) {
    auto backlog = take_pending(d);
    const auto attempts = fallback_attempts(d, backlog, now);
    for (std::size_t i = 0; i < backlog.size(); ++i) {
      const auto idx = open_access(d, attempts[i].request_epoch, {std::move(backlog[i])});
      enqueue(SlotEntry{SlotEntry::Kind::direct, idx, attempts[i].request_epoch}, now);
    }
  }

  void on_mobility(double now) {
    step_mobility(world_.devices, cfg_.engine.mobility_step, cfg_.scenario.area_side,
                  cfg_.scenario.speed_variance, mobility_rng_);
    for (const auto& d : world_.devices) world_.positions[d.id] = d.position;
    queue_.push(now + cfg_.engine.mobility_step, EventKind::mobility_tick);
  }

  void on_global_update(double now) {
    world_.sync_positions();
    Partition next = world_.group(clustering_rng_, history_);
    const GroupId base = partition_.next_group_id;
    for (auto& g : next.groups) g.id += base;
    next.next_group_id += base;

    for (auto& [id, rt] : runtimes_) rt.retiring = true;
    partition_ = std::move(next);
    tracker_ = FallbackTracker(cfg_.protocol.fallback_cycles);
    for (const auto& g : partition_.groups) {
      launch_group(g, now);
      auto& rt = runtimes_[g.id];
      for (DeviceId m : g.members) {
        rt.state.downlink_signaling.push_back(make_update_command(m, g.id, g.gc));
      }
    }
    note_group_count(now);
    queue_.push(now + cfg_.engine.update_interval, EventKind::global_update_tick);
  }

  // ---- wrap-up -----------------------------------------------------------

  void finish(double horizon) {
    auto censor = [&](const StagedPayload& p) {
      ++report_.pending;
      report_.censored.add(horizon - p.arrival);
    };
    for (const auto& q : pending_) {
      for (const auto& p : q) censor(p);
    }
    for (const auto& a : accesses_) {
      for (const auto& p : a.payloads) censor(p);
    }
    for (const auto& [id, rt] : runtimes_) {
      if (rt.state.phase != CyclePhase::DA) ++report_.groups[id].cycles_in_flight;
      if (rt.state.ra_state != RaState::granted) {
        for (const auto& p : rt.state.aggregated_uplink) censor(p);
      }
    }
    if (mode_ == Mode::grouped_ra) note_group_count(horizon);
  }

  const SimConfig& cfg_;
  Mode mode_;
  World world_;
  FieldLink field_link_;
  const D2dLink* link_;
  Rng arrivals_rng_;
  Rng mobility_rng_;
  Rng clustering_rng_;
  Rng rach_rng_;
  Rng protocol_rng_;
  FallbackTracker tracker_;

  EventQueue queue_;
  std::map<std::int64_t, std::vector<SlotEntry>> slots_;
  std::vector<DirectAccess> accesses_;
  std::vector<std::deque<StagedPayload>> pending_;
  Partition partition_;
  GcHistory history_;
  std::map<GroupId, GroupRuntime> runtimes_;
  std::uint64_t next_generation_ = 0;
  MetricsReport report_;
};

}  // namespace

MetricsReport run(const SimConfig& config, Mode mode, std::uint64_t seed, const RunOptions& options) {
  validate(config);
  if (config.engine.horizon <= 0.0) {
    MetricsReport empty;
    empty.seed = seed;
    empty.mode = mode;
    empty.device_count = config.scenario.device_count;
    return empty;
  }
  auto sim = std::make_unique<Simulation>(config, mode, seed, options);
  return sim->run();
}

const MetricSummary& MonteCarloReport::metric(std::string_view name) const {
  for (const auto& [n, s] : summary) {
    if (n == name) return s;
  }
  throw std::out_of_range(fmt::format("no metric '{}'", name));
}

MonteCarloReport aggregate(std::vector<MetricsReport> runs) {
  MonteCarloReport out;
  out.runs = std::move(runs);
  for (const auto& r : out.runs) out.seeds.push_back(r.seed);
  if (out.runs.empty()) return out;

  const auto names = out.runs.front().scalars();
  std::vector<std::vector<double>> columns(names.size());
  for (const auto& r : out.runs) {
    const auto s = r.scalars();
    for (std::size_t i = 0; i < s.size(); ++i) columns[i].push_back(s[i].second);
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& c = columns[i];
    double sum = 0.0;
    for (double v : c) sum += v;
    const double mean = sum / static_cast<double>(c.size());
    double ss = 0.0;
    for (double v : c) ss += (v - mean) * (v - mean);
    const double sd = c.size() > 1 ? std::sqrt(ss / static_cast<double>(c.size() - 1)) : 0.0;
    out.summary.emplace_back(names[i].first, MetricSummary{mean, sd});
  }

  double sum = 0.0;
  std::size_t count = 0;
  SampleStats ull;
  for (const auto& r : out.runs) {
    for (double d : r.delays) sum += d;
    count += r.delays.size();
    for (int ac = 0; ac < kAccessClassCount; ++ac) {
      if (!is_ull(ac)) continue;
      ull.count += r.delay_by_ac[ac].count;
      ull.sum += r.delay_by_ac[ac].sum;
    }
  }
  out.pooled_mean_delay = count ? sum / static_cast<double>(count) : 0.0;
  out.pooled_ull_mean_delay = ull.mean();
  return out;
}

namespace {

/// Evaluates job(i) for i in [0, n) on up to `threads` workers; the first
/// failure (lowest index) is rethrown after all workers stop.
template <typename Job>
std::vector<MetricsReport> parallel_runs(std::size_t n, std::size_t threads, Job job) {
  std::vector<MetricsReport> out(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride) {
      try {
        out[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

template <typename Job>
MonteCarloReport batch(std::size_t runs, std::uint64_t base_seed, std::size_t threads, Job job) {
  if (runs == 0) throw std::invalid_argument("monte_carlo: runs must be at least 1");
  auto reports = parallel_runs(runs, threads, [&](std::size_t i) {
    const std::uint64_t seed = base_seed + i;
    try {
      return job(seed);
    } catch (const std::exception& e) {
      throw RunError(fmt::format("run with seed {} failed: {}", seed, e.what()));
    }
  });
  return aggregate(std::move(reports));
}

}  // namespace

MonteCarloReport monte_carlo(const SimConfig& config, Mode mode, std::size_t runs,
                             std::uint64_t base_seed, std::size_t threads) {
  validate(config);
  return batch(runs, base_seed, threads,
               [&](std::uint64_t seed) { return run(config, mode, seed); });
}

std::vector<SweepPoint> sweep(const SimConfig& config, SweepVariable variable,
                              const std::vector<double>& values, Mode mode, std::size_t runs,
                              std::uint64_t base_seed, std::size_t threads) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  std::vector<SweepPoint> table;
  table.reserve(values.size());
  for (double v : values) {
    SimConfig c = config;
    try {
      switch (variable) {
        case SweepVariable::device_count:
          c.scenario.device_count = static_cast<std::size_t>(std::llround(v));
          table.push_back({v, monte_carlo(c, mode, runs, base_seed, threads)});
          break;
        case SweepVariable::group_size_cap: {
          c.clustering.max_group_size = static_cast<std::size_t>(std::llround(v));
          validate(c);
          table.push_back({v, batch(runs, base_seed, threads, [&](std::uint64_t seed) {
                             const auto q = group_size_quality(c, c.clustering.max_group_size, seed);
                             MetricsReport r;
                             r.seed = seed;
                             r.mode = mode;
                             r.mean_d2d_per = q.mean_per;
                             r.mean_d2d_reliability = q.mean_reliability;
                             return r;
                           })});
          break;
        }
        case SweepVariable::csi_mae: {
          c = csi_study_config(config, v);
          validate(c);
          table.push_back({v, batch(runs, base_seed, threads, [&](std::uint64_t seed) {
                             const auto q = initial_link_quality(c, seed);
                             MetricsReport r;
                             r.seed = seed;
                             r.mode = mode;
                             r.device_count = c.scenario.device_count;
                             r.mean_d2d_per = q.mean_per;
                             r.worst_d2d_per = q.worst_per;
                             r.mean_d2d_reliability = q.mean_reliability;
                             return r;
                           })});
          break;
        }
      }
    } catch (const std::exception& e) {
      throw RunError(fmt::format("sweep {}={}: {}", to_string(variable), v, e.what()));
    }
  }
  return table;
}

}  // namespace gra
