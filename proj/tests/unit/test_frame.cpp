#include <doctest.h>

#include <string>
#include <vector>

#include "gra/frame.hpp"
#include "gra/rng.hpp"

using namespace gra;

namespace {

AggregatedFrame random_frame(Rng& rng) {
  std::uniform_int_distribution<int> small(0, 6);
  std::uniform_int_distribution<std::uint32_t> u32;
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> len(0, 80);
  AggregatedFrame f;
  f.group_id = u32(rng);
  f.cycle_seq = u32(rng);
  f.direction = byte(rng) % 2 ? Direction::downlink : Direction::uplink;
  const std::vector<SignalingKind> up{SignalingKind::leave_request, SignalingKind::link_report,
                                      SignalingKind::join_request};
  const std::vector<SignalingKind> down{SignalingKind::ack, SignalingKind::update_command,
                                        SignalingKind::join_command};
  const auto& kinds = f.direction == Direction::uplink ? up : down;
  for (int i = small(rng); i > 0; --i) {
    SignalingMessage m;
    m.kind = kinds[static_cast<std::size_t>(byte(rng)) % kinds.size()];
    m.subject = u32(rng);
    for (int j = len(rng) / 8; j > 0; --j) m.detail.push_back(static_cast<std::uint8_t>(byte(rng)));
    f.signaling.push_back(std::move(m));
  }
  for (int i = small(rng); i > 0; --i) {
    DataRecord d;
    d.device = u32(rng);
    for (int j = len(rng); j > 0; --j) d.payload.push_back(static_cast<std::uint8_t>(byte(rng)));
    f.data.push_back(std::move(d));
  }
  return f;
}

}  // namespace

TEST_CASE("golden uplink frame bytes") {
  AggregatedFrame f;
  f.group_id = 0x01020304;
  f.cycle_seq = 7;
  f.direction = Direction::uplink;
  f.signaling.push_back({SignalingKind::link_report, 0x0A, {0xFF}});
  f.data.push_back({0x0B, {0xDE, 0xAD}});
  const Bytes expected{
      0x01, 0x02, 0x03, 0x04,  // group_id
      0x00, 0x00, 0x00, 0x07,  // cycle_seq
      0x00,                    // uplink
      0x00, 0x01,              // signaling_count
      0x00, 0x01,              // data_count
      0x02,                    // link_report
      0x00, 0x00, 0x00, 0x0A,  // subject
      0x00, 0x01, 0xFF,        // detail
      0x00, 0x00, 0x00, 0x0B,  // device
      0x00, 0x02, 0xDE, 0xAD,  // payload
  };
  CHECK(encode_frame(f) == expected);
  CHECK(f.encoded_size() == expected.size());
  CHECK(f.signaling_bytes() == 8);
  CHECK(parse_frame(expected) == f);
}

TEST_CASE("golden downlink header") {
  AggregatedFrame f;
  f.group_id = 9;
  f.cycle_seq = 0x10000;
  f.direction = Direction::downlink;
  f.signaling.push_back({SignalingKind::update_command, 3, {}});
  const Bytes bytes = encode_frame(f);
  const Bytes head{0, 0, 0, 9, 0, 1, 0, 0, 1, 0, 1, 0, 0, 5, 0, 0, 0, 3, 0, 0};
  CHECK(bytes == head);
}

TEST_CASE("frame length arithmetic") {
  AggregatedFrame empty;
  CHECK(encode_frame(empty).size() == 13);
  AggregatedFrame two;
  two.data.push_back({1, Bytes(64, 0x11)});
  two.data.push_back({2, Bytes(64, 0x22)});
  CHECK(encode_frame(two).size() == 153);
}

TEST_CASE("parse rejects malformed input with an offset") {
  const Bytes twelve(12, 0);
  CHECK_THROWS_AS(parse_frame(twelve), FrameParseError);

  Bytes missing_segment = encode_frame(AggregatedFrame{});
  missing_segment[10] = 1;  // signaling_count = 1, no records follow
  try {
    parse_frame(missing_segment);
    FAIL("accepted a count with no segment bytes");
  } catch (const FrameParseError& e) {
    CHECK(e.offset() == 13);
  }

  AggregatedFrame f;
  f.data.push_back({1, {1, 2, 3}});
  Bytes trailing = encode_frame(f);
  trailing.push_back(0);
  CHECK_THROWS_AS(parse_frame(trailing), FrameParseError);

  Bytes truncated = encode_frame(f);
  truncated.pop_back();
  CHECK_THROWS_AS(parse_frame(truncated), FrameParseError);

  AggregatedFrame s;
  s.signaling.push_back({SignalingKind::join_request, 1, {}});
  Bytes bad_kind = encode_frame(s);
  bad_kind[13] = 0x7F;
  try {
    parse_frame(bad_kind);
    FAIL("accepted an unknown kind");
  } catch (const FrameParseError& e) {
    CHECK(e.offset() == 13);
  }
  Bytes wrong_direction = encode_frame(s);
  wrong_direction[8] = 1;
  CHECK_THROWS_AS(parse_frame(wrong_direction), FrameParseError);
  Bytes bad_direction = encode_frame(s);
  bad_direction[8] = 2;
  CHECK_THROWS_AS(parse_frame(bad_direction), FrameParseError);
}

TEST_CASE("encode refuses unrepresentable frames") {
  AggregatedFrame f;
  f.signaling.push_back({SignalingKind::ack, 1, {}});
  CHECK_THROWS_AS(encode_frame(f), std::invalid_argument);
  AggregatedFrame big;
  big.data.push_back({1, Bytes(70000, 0)});
  CHECK_THROWS_AS(encode_frame(big), std::invalid_argument);
}

TEST_CASE("direction rules for signaling kinds") {
  CHECK(allowed_in(SignalingKind::link_report, Direction::uplink));
  CHECK_FALSE(allowed_in(SignalingKind::link_report, Direction::downlink));
  CHECK(allowed_in(SignalingKind::join_command, Direction::downlink));
  CHECK_FALSE(allowed_in(SignalingKind::ack, Direction::uplink));
  CHECK(std::string(to_string(SignalingKind::leave_request)) == "leave_request");
}

TEST_CASE("round trip over random frames and accepted byte strings") {
  Rng rng(77);
  for (int i = 0; i < 2000; ++i) {
    const auto f = random_frame(rng);
    const auto bytes = encode_frame(f);
    CHECK(bytes.size() == f.encoded_size());
    const auto back = parse_frame(bytes);
    REQUIRE(back == f);
    CHECK(encode_frame(back) == bytes);
  }
}
