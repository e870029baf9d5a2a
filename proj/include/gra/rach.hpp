#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "gra/rng.hpp"

namespace gra {

struct RachConfig {
  double slot_length = 0.005;  // s
  std::size_t preambles = 54;
  /// Collided attempts retry after a uniform delay in (0, retry_backoff].
  double retry_backoff = 0.5;  // s

  friend bool operator==(const RachConfig&, const RachConfig&) = default;
};

struct EabConfig {
  double barring_factor = 0.1;
  double max_backoff = 0.5;  // s
  double sib_period = 0.32;  // s
  std::set<int> exempt_acs{11, 12, 13, 14, 15};

  friend bool operator==(const EabConfig&, const EabConfig&) = default;
};

void validate(const RachConfig& config);
void validate(const EabConfig& config);

/// Who is asking for access: a GC on behalf of its group, or a single device.
struct Requester {
  enum class Kind : std::uint8_t { device, group };
  Kind kind = Kind::device;
  std::uint32_t id = 0;

  friend bool operator==(const Requester&, const Requester&) = default;
};

struct RaAttempt {
  Requester requester;
  double request_epoch = 0.0;  // when the access need arose
  double attempt_epoch = 0.0;  // slot start of this transmission
  std::size_t preamble = 0;
};

enum class SlotOutcome : std::uint8_t { success, collision };

/// Draws a preamble for every attempt; an attempt succeeds iff it is the only
/// one on its preamble.
std::vector<SlotOutcome> resolve_slot(std::span<RaAttempt> attempts, const RachConfig& config,
                                      Rng& rng);

struct GateDecision {
  bool pass = true;
  double backoff = 0.0;  // s, only when barred
};

GateDecision eab_gate(int access_class, const EabConfig& config, Rng& rng);

/// Smallest multiple of the SIB period strictly after `now`.
double next_sib_epoch(double now, const EabConfig& config);

/// Start of the first RACH slot strictly after `now`.
double next_slot_epoch(double now, const RachConfig& config);

/// Uniform in (0, max].
double uniform_backoff(double max, Rng& rng);

/// Closed-form per-attempt success probability with k contenders.
double success_probability(std::size_t contenders, std::size_t preambles);

}  // namespace gra
