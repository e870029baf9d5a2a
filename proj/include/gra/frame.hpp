#pragma once

// Aggregated uplink/downlink frame: a 13-byte header, the request/report (or
// acknowledgment/command) segment, then the per-device data segment. All
// multi-byte fields are big-endian and every segment record is length-prefixed.
//
//   header    group_id u32 | cycle_seq u32 | direction u8 | signaling_count u16 | data_count u16
//   signaling kind u8 | subject u32 | detail_len u16 | detail[detail_len]
//   data      device u32 | payload_len u16 | payload[payload_len]

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gra/types.hpp"

namespace gra {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kFrameHeaderSize = 13;
inline constexpr std::size_t kSignalingRecordOverhead = 7;
inline constexpr std::size_t kDataRecordOverhead = 6;

enum class Direction : std::uint8_t { uplink = 0, downlink = 1 };

enum class SignalingKind : std::uint8_t {
  leave_request = 1,
  link_report = 2,
  join_request = 3,
  ack = 4,
  update_command = 5,
  join_command = 6,
};

/// Uplink carries requests and reports, downlink carries acks and commands.
bool allowed_in(SignalingKind kind, Direction direction);
const char* to_string(SignalingKind kind);

struct SignalingMessage {
  SignalingKind kind = SignalingKind::link_report;
  DeviceId subject = 0;
  Bytes detail;

  std::size_t encoded_size() const { return kSignalingRecordOverhead + detail.size(); }
  friend bool operator==(const SignalingMessage&, const SignalingMessage&) = default;
};

struct DataRecord {
  DeviceId device = 0;
  Bytes payload;

  std::size_t encoded_size() const { return kDataRecordOverhead + payload.size(); }
  friend bool operator==(const DataRecord&, const DataRecord&) = default;
};

struct AggregatedFrame {
  GroupId group_id = 0;
  std::uint32_t cycle_seq = 0;
  Direction direction = Direction::uplink;
  std::vector<SignalingMessage> signaling;
  std::vector<DataRecord> data;

  std::size_t encoded_size() const;
  std::size_t signaling_bytes() const;
  friend bool operator==(const AggregatedFrame&, const AggregatedFrame&) = default;
};

/// Raised by parse_frame; offset is the byte position where decoding failed.
class FrameParseError : public std::runtime_error {
 public:
  FrameParseError(std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Throws std::invalid_argument for frames that cannot be represented
/// (counts or lengths above 16 bits, kinds not allowed in the direction).
Bytes encode_frame(const AggregatedFrame& frame);

AggregatedFrame parse_frame(std::span<const std::uint8_t> bytes);

/// Big-endian helpers shared with the GDB message codec.
namespace wire {

void put_u8(Bytes& out, std::uint8_t v);
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
void put_f64(Bytes& out, double v);

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8(const char* field);
  std::uint16_t u16(const char* field);
  std::uint32_t u32(const char* field);
  std::uint64_t u64(const char* field);
  double f64(const char* field);
  Bytes take(std::size_t n, const char* field);

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* field) const;
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace wire

}  // namespace gra
