#include "gra/scenario.hpp"

#include <cmath>
#include <fmt/format.h>

namespace gra {

void validate(const ScenarioConfig& c) {
  const auto& m = c.traffic_mix;
  for (double f : {m.aperiodic, m.periodic_1s, m.periodic_10s}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("scenario.traffic_mix: fractions must lie in [0,1]");
  }
  const double sum = m.aperiodic + m.periodic_1s + m.periodic_10s;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError(fmt::format("scenario.traffic_mix: fractions sum to {}, expected 1", sum));
  }
  if (c.device_count < 1) throw ConfigError("scenario.device_count: must be positive");
  if (!(c.area_side > 0.0)) throw ConfigError("scenario.area_side: must be positive");
  if (!(c.mobile_fraction >= 0.0 && c.mobile_fraction <= 1.0)) {
    throw ConfigError("scenario.mobile_fraction: must lie in [0,1]");
  }
  if (!(c.speed_variance >= 0.0)) throw ConfigError("scenario.speed_variance: must be non-negative");
  if (!(c.aperiodic_rate >= 0.0)) throw ConfigError("scenario.aperiodic_rate: must be non-negative");
  if (c.payload < 1 || c.payload > 0xffff) throw ConfigError("scenario.payload: must be in [1, 65535]");
}

std::vector<DeviceProfile> build_scenario(const ScenarioConfig& config, Rng& rng) {
  validate(config);
  std::uniform_real_distribution<double> coord(0.0, config.area_side);
  std::uniform_int_distribution<int> access_class(0, kAccessClassCount - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto& mix = config.traffic_mix;
  std::vector<DeviceProfile> devices;
  devices.reserve(config.device_count);
  for (std::size_t i = 0; i < config.device_count; ++i) {
    DeviceProfile d;
    d.id = static_cast<DeviceId>(i);
    d.position = {coord(rng), coord(rng)};
    d.access_class = access_class(rng);

    const double t = unit(rng);
    d.traffic.payload = config.payload;
    if (t < mix.aperiodic) {
      d.traffic.kind = TrafficMode::Kind::aperiodic;
      d.traffic.aperiodic_rate = config.aperiodic_rate;
    } else {
      d.traffic.kind = TrafficMode::Kind::periodic;
      d.traffic.period = t < mix.aperiodic + mix.periodic_1s ? 1.0 : 10.0;
    }
    d.mobile = unit(rng) < config.mobile_fraction;
    devices.push_back(d);
  }
  return devices;
}

double reflect_into(double value, double side) {
  const double period = 2.0 * side;
  double v = std::fmod(value, period);
  if (v < 0) v += period;
  return v > side ? period - v : v;
}

void step_mobility(std::span<DeviceProfile> devices, double dt, double area_side,
                   double speed_variance, Rng& rng) {
  std::normal_distribution<double> step(0.0, std::sqrt(speed_variance / 2.0) * dt);
  for (auto& d : devices) {
    if (!d.mobile) continue;
    d.position.x = reflect_into(d.position.x + step(rng), area_side);
    d.position.y = reflect_into(d.position.y + step(rng), area_side);
  }
}

std::vector<double> draw_arrivals(const DeviceProfile& device, double horizon, Rng& rng,
                                  double phase) {
  std::vector<double> epochs;
  if (!(horizon > 0.0)) return epochs;
  const auto& t = device.traffic;
  if (t.kind == TrafficMode::Kind::periodic) {
    if (phase < 0.0) phase = std::uniform_real_distribution<double>(0.0, t.period)(rng);
    for (std::size_t k = 0;; ++k) {
      const double e = phase + static_cast<double>(k) * t.period;
      if (e >= horizon) break;
      epochs.push_back(e);
    }
    return epochs;
  }
  if (t.aperiodic_rate <= 0.0) return epochs;
  std::exponential_distribution<double> gap(t.aperiodic_rate);
  for (double e = gap(rng); e < horizon; e += gap(rng)) epochs.push_back(e);
  return epochs;
}

}  // namespace gra
