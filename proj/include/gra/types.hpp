#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gra {

using DeviceId = std::uint32_t;
using GroupId = std::uint32_t;

/// Planar position in meters.
struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Raised for malformed or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the group cycle state machine is driven into an illegal state.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace gra
