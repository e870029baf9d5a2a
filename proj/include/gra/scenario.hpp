#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gra/rng.hpp"
#include "gra/types.hpp"

namespace gra {

inline constexpr int kAccessClassCount = 16;

/// Access classes 11..15 are the ultra-low-latency classes.
constexpr bool is_ull(int access_class) { return access_class >= 11 && access_class <= 15; }

struct TrafficMode {
  enum class Kind : std::uint8_t { aperiodic, periodic };

  Kind kind = Kind::aperiodic;
  double period = 0.0;          // seconds, periodic only
  double aperiodic_rate = 0.0;  // arrivals/s, aperiodic only
  std::size_t payload = 64;     // bytes

  friend bool operator==(const TrafficMode&, const TrafficMode&) = default;
};

struct DeviceProfile {
  DeviceId id = 0;
  int access_class = 0;
  TrafficMode traffic;
  bool mobile = false;
  Position position;

  bool ull() const { return is_ull(access_class); }
  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

/// Fractions of aperiodic, 1 s periodic and 10 s periodic devices.
struct TrafficMix {
  double aperiodic = 0.5;
  double periodic_1s = 0.25;
  double periodic_10s = 0.25;

  friend bool operator==(const TrafficMix&, const TrafficMix&) = default;
};

struct ScenarioConfig {
  double area_side = 200.0;
  std::size_t device_count = 1000;
  TrafficMix traffic_mix;
  double mobile_fraction = 0.5;
  double speed_variance = 2.0;  // m^2/s^2
  double aperiodic_rate = 0.1;  // arrivals/s
  std::size_t payload = 64;     // bytes
  bool synchronized = false;    // periodic phases all zero
  /// Default root seed of a run; the command line may override it.
  std::uint64_t rng_seed = 1;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Throws ConfigError when the mix does not sum to one or counts are invalid.
void validate(const ScenarioConfig& config);

std::vector<DeviceProfile> build_scenario(const ScenarioConfig& config, Rng& rng);

/// Random-walk step: each mobile device moves by an independent Gaussian
/// displacement of variance (speed_variance / 2) * dt^2 per axis, reflected
/// into [0, area_side]. Static devices are untouched.
void step_mobility(std::span<DeviceProfile> devices, double dt, double area_side,
                   double speed_variance, Rng& rng);

/// Reflects a coordinate into [0, side].
double reflect_into(double value, double side);

/// Arrival epochs in [0, horizon). A negative phase draws one uniformly in
/// [0, period) for periodic devices; aperiodic devices follow a Poisson process.
std::vector<double> draw_arrivals(const DeviceProfile& device, double horizon, Rng& rng,
                                  double phase = -1.0);

}  // namespace gra
