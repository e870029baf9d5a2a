#include "gra/channel.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

namespace gra {

void validate(const PathLossModel& m) {
  if (!(m.exponent >= 2.0)) throw ConfigError("channel.exponent: must be >= 2");
  if (!(m.shadowing_sigma >= 0.0)) throw ConfigError("channel.shadowing_sigma: must be >= 0");
  if (!(m.d0 > 0.0)) throw ConfigError("channel.d0: must be > 0");
}

void validate(const LinkBudget& b) {
  if (!(b.tx_gain > b.noise_floor)) throw ConfigError("channel.tx_gain: must exceed noise_floor");
}

void validate(const D2dSlotBudget& b) {
  if (!(b.slot_duration > 0.0)) throw ConfigError("channel.slot_duration: must be > 0");
  if (!(b.packet_airtime > 0.0)) throw ConfigError("channel.packet_airtime: must be > 0");
}

double path_loss(const PathLossModel& m, double distance, double shadowing_draw) {
  const double d = std::max(distance, m.d0);
  return m.pl0 + 10.0 * m.exponent * std::log10(d / m.d0) + shadowing_draw;
}

double snr(const LinkBudget& b, double loss) { return b.tx_gain - loss - b.noise_floor; }

double packet_error_rate(double snr_db, std::size_t payload) {
  const double gamma = std::pow(10.0, snr_db / 10.0);
  const double ber = 0.5 * std::exp(-gamma / 2.0);
  const double bits = 8.0 * static_cast<double>(payload);
  // 1 - (1 - ber)^bits, evaluated without cancellation at small ber.
  const double per = -std::expm1(bits * std::log1p(-ber));
  return std::clamp(per, 0.0, 1.0);
}

CsiRecord estimate_csi(double true_loss, double mae, Rng& rng) {
  return {true_loss, true_loss + draw_laplace(rng, mae), mae};
}

std::size_t d2d_attempts(const D2dSlotBudget& b, std::size_t group_size) {
  if (group_size < 2) return 0;
  const double per_gm = static_cast<double>(group_size - 1) * b.packet_airtime;
  // The small epsilon absorbs representation error at exact multiples.
  const double a = std::floor(b.slot_duration / per_gm + 1e-9);
  return a > 0 ? static_cast<std::size_t>(a) : 0;
}

double d2d_link_reliability(double per, const D2dSlotBudget& b, std::size_t group_size) {
  const auto a = d2d_attempts(b, group_size);
  if (a == 0) return 0.0;
  return 1.0 - std::pow(per, static_cast<double>(a));
}

namespace {

// E[f(X)] for X ~ N(0, sigma^2). The PER curve is a steep step in the
// shadowing draw, so use a composite Gauss-Legendre rule on narrow panels
// over +-10 sigma rather than one global rule.
template <class F>
double shadowing_expectation(double sigma, F&& f) {
  if (sigma <= 0.0) return f(0.0);
  using boost::math::quadrature::gauss;
  constexpr int kPanels = 80;
  constexpr double kReach = 10.0;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto g = [&](double z) { return norm * std::exp(-0.5 * z * z) * f(sigma * z); };
  const double width = 2.0 * kReach / kPanels;
  double total = 0.0;
  for (int k = 0; k < kPanels; ++k) {
    const double lo = -kReach + k * width;
    total += gauss<double, 10>::integrate(g, lo, lo + width);
  }
  return total;
}

}  // namespace

double expected_packet_error_rate(const PathLossModel& m, const LinkBudget& b, double distance,
                                  std::size_t payload) {
  return shadowing_expectation(m.shadowing_sigma, [&](double s) {
    return packet_error_rate(snr(b, path_loss(m, distance, s)), payload);
  });
}

double expected_link_reliability(const PathLossModel& m, const LinkBudget& b,
                                 const D2dSlotBudget& slot, double distance, std::size_t payload,
                                 std::size_t group_size) {
  return shadowing_expectation(m.shadowing_sigma, [&](double s) {
    const double per = packet_error_rate(snr(b, path_loss(m, distance, s)), payload);
    return d2d_link_reliability(per, slot, group_size);
  });
}

double LinkField::shadowing(DeviceId a, DeviceId b) const {
  if (model_.shadowing_sigma <= 0.0) return 0.0;
  return model_.shadowing_sigma * hash_.normal(a, b, 0);
}

double LinkField::true_loss(DeviceId a, const Position& pa, DeviceId b, const Position& pb) const {
  return path_loss(model_, distance(pa, pb), shadowing(a, b));
}

double LinkField::estimation_error(DeviceId a, DeviceId b, std::uint64_t estimator) const {
  return hash_.laplace(a, b, 0x100 + estimator);
}

void MapCsiTable::set(DeviceId a, DeviceId b, double loss) {
  losses_[{std::min(a, b), std::max(a, b)}] = loss;
}

double MapCsiTable::estimated_loss(DeviceId a, DeviceId b) const {
  const auto it = losses_.find({std::min(a, b), std::max(a, b)});
  return it == losses_.end() ? std::numeric_limits<double>::infinity() : it->second;
}

double FieldCsiTable::true_loss(DeviceId a, DeviceId b) const {
  if (a >= positions_.size() || b >= positions_.size()) {
    return std::numeric_limits<double>::infinity();
  }
  return field_->true_loss(a, positions_[a], b, positions_[b]);
}

double FieldCsiTable::estimated_loss(DeviceId a, DeviceId b) const {
  const double t = true_loss(a, b);
  if (mae_ <= 0.0 || !std::isfinite(t)) return t;
  return t + mae_ * field_->estimation_error(a, b, estimator_);
}

}  // namespace gra
