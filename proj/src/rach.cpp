#include "gra/rach.hpp"

#include <cmath>

#include "gra/types.hpp"

namespace gra {

void validate(const RachConfig& c) {
  if (c.preambles < 1) throw ConfigError("rach.preambles: must be >= 1");
  if (!(c.slot_length > 0.0)) throw ConfigError("rach.slot_length: must be > 0");
  if (!(c.retry_backoff >= 0.0)) throw ConfigError("rach.retry_backoff: must be >= 0");
}

void validate(const EabConfig& c) {
  if (!(c.barring_factor >= 0.0 && c.barring_factor <= 1.0)) {
    throw ConfigError("eab.barring_factor: must lie in [0,1]");
  }
  if (!(c.max_backoff >= 0.0)) throw ConfigError("eab.max_backoff: must be >= 0");
  if (!(c.sib_period > 0.0)) throw ConfigError("eab.sib_period: must be > 0");
  for (int ac : c.exempt_acs) {
    if (ac < 0 || ac > 15) throw ConfigError("eab.exempt_acs: access classes lie in [0,15]");
  }
}

std::vector<SlotOutcome> resolve_slot(std::span<RaAttempt> attempts, const RachConfig& config,
                                      Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, config.preambles - 1);
  std::vector<std::size_t> users(config.preambles, 0);
  for (auto& a : attempts) {
    a.preamble = pick(rng);
    ++users[a.preamble];
  }
  std::vector<SlotOutcome> outcomes;
  outcomes.reserve(attempts.size());
  for (const auto& a : attempts) {
    outcomes.push_back(users[a.preamble] == 1 ? SlotOutcome::success : SlotOutcome::collision);
  }
  return outcomes;
}

double uniform_backoff(double max, Rng& rng) {
  if (max <= 0.0) return 0.0;
  // U[0,max) reflected to (0,max].
  return max - std::uniform_real_distribution<double>(0.0, max)(rng);
}

GateDecision eab_gate(int access_class, const EabConfig& config, Rng& rng) {
  if (config.exempt_acs.contains(access_class)) return {true, 0.0};
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < config.barring_factor) return {true, 0.0};
  return {false, uniform_backoff(config.max_backoff, rng)};
}

namespace {

double next_multiple_after(double now, double period) {
  double k = std::floor(now / period) + 1.0;
  while (k * period <= now) k += 1.0;
  while (k > 1.0 && (k - 1.0) * period > now) k -= 1.0;
  return k * period;
}

}  // namespace

double next_sib_epoch(double now, const EabConfig& config) {
  return next_multiple_after(now, config.sib_period);
}

double next_slot_epoch(double now, const RachConfig& config) {
  return next_multiple_after(now, config.slot_length);
}

double success_probability(std::size_t contenders, std::size_t preambles) {
  if (contenders == 0) return 0.0;
  return std::pow(1.0 - 1.0 / static_cast<double>(preambles),
                  static_cast<double>(contenders - 1));
}

}  // namespace gra
