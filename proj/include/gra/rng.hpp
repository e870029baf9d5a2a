#pragma once

#include <cstdint>
#include <random>

namespace gra {

using Rng = std::mt19937_64;

/// Named, independent random streams of one simulation run. Each stream is
/// seeded from the root seed plus its own tag, so extra draws in one module
/// never shift the sequence seen by another.
enum class Stream : std::uint32_t {
  scenario = 1,
  arrivals,
  mobility,
  channel,
  clustering,
  rach,
  protocol,
  gdb,
  study,
};

Rng make_stream(std::uint64_t root_seed, Stream stream);

/// splitmix64 finalizer; used to derive frozen per-link draws without storing
/// an N x N table.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic draws keyed by (seed, unordered device pair, salt).
/// Symmetric in the pair: link(a, b) == link(b, a).
class LinkHash {
 public:
  explicit LinkHash(std::uint64_t seed) : seed_(seed) {}

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint32_t a, std::uint32_t b, std::uint64_t salt) const;
  /// Standard normal.
  double normal(std::uint32_t a, std::uint32_t b, std::uint64_t salt) const;
  /// Laplace with unit scale (E|x| = 1).
  double laplace(std::uint32_t a, std::uint32_t b, std::uint64_t salt) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t key(std::uint32_t a, std::uint32_t b, std::uint64_t salt) const;
  std::uint64_t seed_;
};

/// Laplace(0, scale) draw from a stream; scale 0 yields exactly 0.
double draw_laplace(Rng& rng, double scale);

}  // namespace gra
