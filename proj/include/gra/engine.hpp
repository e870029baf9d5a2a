#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "gra/config.hpp"
#include "gra/protocol.hpp"

namespace gra {

enum class Mode : std::uint8_t { grouped_ra, eab };

const char* to_string(Mode mode);
Mode parse_mode(std::string_view text);

enum class EventKind : std::uint8_t {
  arrival,
  rach_slot,
  sib_broadcast,
  phase_deadline,
  mobility_tick,
  global_update_tick,
  backoff_expiry,
};

struct Event {
  double epoch = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::arrival;
  std::uint64_t subject = 0;  // device, slot index, access or group id
  std::uint64_t tag = 0;      // generation counter where needed
};

/// Min-queue over (epoch, sequence); sequence numbers are assigned on push.
class EventQueue {
 public:
  void push(double epoch, EventKind kind, std::uint64_t subject = 0, std::uint64_t tag = 0);
  Event pop();
  const Event& top() const { return heap_.top(); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.epoch != b.epoch ? a.epoch > b.epoch : a.sequence > b.sequence;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_sequence_ = 0;
};

struct SampleStats {
  std::size_t count = 0;
  double sum = 0.0;
  double max = 0.0;

  void add(double v);
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
};

struct GroupCounters {
  std::size_t ra_requests = 0;
  std::size_t cycles_completed = 0;
  std::size_t cycles_in_flight = 0;  // past aggregation when the horizon hit
};

struct MetricsReport {
  std::uint64_t seed = 0;
  Mode mode = Mode::eab;
  std::size_t device_count = 0;

  /// Per payload: arrival to grant completion of the access carrying it.
  std::vector<double> delays;
  /// Per RA request: request epoch to grant completion.
  std::vector<double> access_delays;
  std::array<SampleStats, 16> delay_by_ac{};
  SampleStats censored;  // served delays plus (horizon - arrival) of pending payloads

  std::size_t arrivals = 0;
  std::size_t delivered = 0;
  std::size_t failed = 0;  // no path currently drops payloads; kept for the conservation identity
  std::size_t pending = 0;

  std::size_t ra_requests = 0;
  std::size_t direct_ra_requests = 0;
  std::size_t preamble_transmissions = 0;
  std::size_t collisions = 0;
  std::size_t barred = 0;

  std::size_t d2d_success = 0;
  std::size_t d2d_failure = 0;
  std::size_t distribution_success = 0;
  std::size_t distribution_failure = 0;
  double mean_d2d_per = 0.0;
  double worst_d2d_per = 0.0;
  double mean_d2d_reliability = 0.0;

  std::size_t uplink_frames = 0;
  std::size_t uplink_bytes = 0;
  std::size_t uplink_signaling_bytes = 0;
  std::size_t downlink_frames = 0;
  std::size_t downlink_bytes = 0;
  std::size_t downlink_signaling_bytes = 0;

  std::size_t link_reports = 0;
  std::size_t fallbacks = 0;
  std::size_t macro_collapses = 0;

  std::vector<std::pair<double, std::size_t>> group_count;
  std::map<GroupId, GroupCounters> groups;

  double mean_delay() const;
  double ull_mean_delay() const;
  double collision_rate() const;

  /// Flat scalar view used for aggregation and CSV output; order is stable.
  std::vector<std::pair<std::string, double>> scalars() const;
};

/// Optional hooks for tests: replace the intra-group link model.
struct RunOptions {
  const D2dLink* link_override = nullptr;
};

MetricsReport run(const SimConfig& config, Mode mode, std::uint64_t seed,
                  const RunOptions& options = {});

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct MonteCarloReport {
  std::vector<MetricsReport> runs;
  std::vector<std::uint64_t> seeds;
  std::vector<std::pair<std::string, MetricSummary>> summary;  // per scalar, across runs
  /// Served-only mean delay pooled over runs (per-run means weighted by
  /// sample counts).
  double pooled_mean_delay = 0.0;
  double pooled_ull_mean_delay = 0.0;

  const MetricSummary& metric(std::string_view name) const;
};

/// Aggregates already computed per-run reports.
MonteCarloReport aggregate(std::vector<MetricsReport> runs);

/// Runs `runs` independent simulations with seeds base_seed + i, on up to
/// `threads` worker threads; results do not depend on the thread count.
MonteCarloReport monte_carlo(const SimConfig& config, Mode mode, std::size_t runs,
                             std::uint64_t base_seed, std::size_t threads = 1);

enum class SweepVariable : std::uint8_t { device_count, group_size_cap, csi_mae };

const char* to_string(SweepVariable variable);

struct SweepPoint {
  double value = 0.0;
  MonteCarloReport report;
};

/// One Monte-Carlo batch per value. device_count runs the full simulation in
/// `mode`; group_size_cap and csi_mae run the link-level studies.
std::vector<SweepPoint> sweep(const SimConfig& config, SweepVariable variable,
                              const std::vector<double>& values, Mode mode, std::size_t runs,
                              std::uint64_t base_seed, std::size_t threads = 1);

/// Raised when one run of a batch fails; names the seed (and sweep point).
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gra
