#include "gra/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gra {

Rng make_stream(std::uint64_t root_seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(root_seed),
                    static_cast<std::uint32_t>(root_seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x67726aU};
  return Rng(seq);
}

std::uint64_t LinkHash::key(std::uint32_t a, std::uint32_t b, std::uint64_t salt) const {
  const auto lo = std::min(a, b);
  const auto hi = std::max(a, b);
  std::uint64_t h = mix64(seed_ ^ mix64(salt));
  h = mix64(h ^ ((static_cast<std::uint64_t>(hi) << 32) | lo));
  return h;
}

double LinkHash::uniform(std::uint32_t a, std::uint32_t b, std::uint64_t salt) const {
  // 53 random bits, shifted off zero.
  const auto bits = key(a, b, salt) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double LinkHash::normal(std::uint32_t a, std::uint32_t b, std::uint64_t salt) const {
  const double u1 = uniform(a, b, 2 * salt);
  const double u2 = uniform(a, b, 2 * salt + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double LinkHash::laplace(std::uint32_t a, std::uint32_t b, std::uint64_t salt) const {
  const double u = uniform(a, b, salt) - 0.5;
  const double magnitude = -std::log1p(-2.0 * std::abs(u));
  return u < 0 ? -magnitude : magnitude;
}

double draw_laplace(Rng& rng, double scale) {
  if (scale <= 0.0) return 0.0;
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution sign(0.5);
  const double magnitude = expo(rng) * scale;
  return sign(rng) ? magnitude : -magnitude;
}

}  // namespace gra
