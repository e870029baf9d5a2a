#include "gra/frame.hpp"

#include <bit>
#include <cstring>
#include <fmt/format.h>
#include <limits>

namespace gra {

bool allowed_in(SignalingKind kind, Direction direction) {
  switch (kind) {
    case SignalingKind::leave_request:
    case SignalingKind::link_report:
    case SignalingKind::join_request:
      return direction == Direction::uplink;
    case SignalingKind::ack:
    case SignalingKind::update_command:
    case SignalingKind::join_command:
      return direction == Direction::downlink;
  }
  return false;
}

const char* to_string(SignalingKind kind) {
  switch (kind) {
    case SignalingKind::leave_request: return "leave_request";
    case SignalingKind::link_report: return "link_report";
    case SignalingKind::join_request: return "join_request";
    case SignalingKind::ack: return "ack";
    case SignalingKind::update_command: return "update_command";
    case SignalingKind::join_command: return "join_command";
  }
  return "unknown";
}

std::size_t AggregatedFrame::signaling_bytes() const {
  std::size_t n = 0;
  for (const auto& s : signaling) n += s.encoded_size();
  return n;
}

std::size_t AggregatedFrame::encoded_size() const {
  std::size_t n = kFrameHeaderSize + signaling_bytes();
  for (const auto& d : data) n += d.encoded_size();
  return n;
}

FrameParseError::FrameParseError(std::size_t offset, const std::string& what)
    : std::runtime_error(fmt::format("frame parse error at offset {}: {}", offset, what)),
      offset_(offset) {}

namespace wire {

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void Reader::need(std::size_t n, const char* field) const {
  if (remaining() < n) {
    throw FrameParseError(pos_, fmt::format("truncated {}: need {} bytes, {} left", field, n,
                                            remaining()));
  }
}

std::uint8_t Reader::u8(const char* field) {
  need(1, field);
  return bytes_[pos_++];
}

std::uint16_t Reader::u16(const char* field) {
  need(2, field);
  const auto v = static_cast<std::uint16_t>((bytes_[pos_] << 8) | bytes_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::uint32_t Reader::u32(const char* field) {
  need(4, field);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
  pos_ += 4;
  return v;
}

std::uint64_t Reader::u64(const char* field) {
  need(8, field);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | bytes_[pos_ + i];
  pos_ += 8;
  return v;
}

double Reader::f64(const char* field) { return std::bit_cast<double>(u64(field)); }

Bytes Reader::take(std::size_t n, const char* field) {
  need(n, field);
  Bytes out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
            bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}

}  // namespace wire

namespace {

constexpr std::size_t kMax16 = std::numeric_limits<std::uint16_t>::max();

void require_u16(std::size_t n, const char* what) {
  if (n > kMax16) throw std::invalid_argument(fmt::format("{} {} exceeds 16 bits", what, n));
}

}  // namespace

Bytes encode_frame(const AggregatedFrame& frame) {
  require_u16(frame.signaling.size(), "signaling_count");
  require_u16(frame.data.size(), "data_count");

  Bytes out;
  out.reserve(frame.encoded_size());
  wire::put_u32(out, frame.group_id);
  wire::put_u32(out, frame.cycle_seq);
  wire::put_u8(out, static_cast<std::uint8_t>(frame.direction));
  wire::put_u16(out, static_cast<std::uint16_t>(frame.signaling.size()));
  wire::put_u16(out, static_cast<std::uint16_t>(frame.data.size()));

  for (const auto& s : frame.signaling) {
    if (!allowed_in(s.kind, frame.direction)) {
      throw std::invalid_argument(fmt::format("{} not allowed in {} frame", to_string(s.kind),
                                              frame.direction == Direction::uplink ? "uplink"
                                                                                   : "downlink"));
    }
    require_u16(s.detail.size(), "detail_len");
    wire::put_u8(out, static_cast<std::uint8_t>(s.kind));
    wire::put_u32(out, s.subject);
    wire::put_u16(out, static_cast<std::uint16_t>(s.detail.size()));
    out.insert(out.end(), s.detail.begin(), s.detail.end());
  }
  for (const auto& d : frame.data) {
    require_u16(d.payload.size(), "payload_len");
    wire::put_u32(out, d.device);
    wire::put_u16(out, static_cast<std::uint16_t>(d.payload.size()));
    out.insert(out.end(), d.payload.begin(), d.payload.end());
  }
  return out;
}

AggregatedFrame parse_frame(std::span<const std::uint8_t> bytes) {
  wire::Reader in(bytes);
  AggregatedFrame frame;
  frame.group_id = in.u32("header.group_id");
  frame.cycle_seq = in.u32("header.cycle_seq");
  const auto dir_offset = in.offset();
  const auto dir = in.u8("header.direction");
  if (dir > 1) throw FrameParseError(dir_offset, fmt::format("invalid direction byte {}", dir));
  frame.direction = static_cast<Direction>(dir);
  const auto signaling_count = in.u16("header.signaling_count");
  const auto data_count = in.u16("header.data_count");

  frame.signaling.reserve(std::min<std::size_t>(signaling_count, in.remaining()));
  for (std::size_t i = 0; i < signaling_count; ++i) {
    const auto kind_offset = in.offset();
    const auto kind = in.u8("signaling.kind");
    if (kind < 1 || kind > 6) {
      throw FrameParseError(kind_offset, fmt::format("unknown signaling kind {}", kind));
    }
    SignalingMessage s;
    s.kind = static_cast<SignalingKind>(kind);
    if (!allowed_in(s.kind, frame.direction)) {
      throw FrameParseError(kind_offset, fmt::format("{} not allowed in this direction",
                                                     to_string(s.kind)));
    }
    s.subject = in.u32("signaling.subject");
    const auto len = in.u16("signaling.detail_len");
    s.detail = in.take(len, "signaling.detail");
    frame.signaling.push_back(std::move(s));
  }
  frame.data.reserve(std::min<std::size_t>(data_count, in.remaining()));
  for (std::size_t i = 0; i < data_count; ++i) {
    DataRecord d;
    d.device = in.u32("data.device");
    const auto len = in.u16("data.payload_len");
    d.payload = in.take(len, "data.payload");
    frame.data.push_back(std::move(d));
  }
  if (in.remaining() != 0) {
    throw FrameParseError(in.offset(), fmt::format("{} trailing bytes beyond declared lengths",
                                                   in.remaining()));
  }
  return frame;
}

}  // namespace gra
