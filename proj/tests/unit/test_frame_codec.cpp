#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "uwbaudio/crc16.hpp"
#include "uwbaudio/frame_codec.hpp"

using namespace uwb;

namespace {

std::uint16_t crc_bitwise(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t byte : data) {
    crc ^= static_cast<std::uint16_t>(byte << 8);
    for (int i = 0; i < 8; ++i) crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                                                     : static_cast<std::uint16_t>(crc << 1);
  }
  return crc;
}

Frame random_frame(std::mt19937_64& rng) {
  Frame f;
  const auto type = static_cast<FrameType>(rng() % 3);
  f.header = {type,
              static_cast<std::uint8_t>(rng()),
              static_cast<std::uint8_t>(rng()),
              static_cast<std::uint8_t>(rng() & 3),
              static_cast<std::uint16_t>(rng()),
              static_cast<std::uint32_t>(rng())};
  for (auto& b : f.mac_reserved) b = static_cast<std::uint8_t>(rng());
  if (type != FrameType::Ack) {
    f.payload.resize(rng() % 1500);
    for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
  }
  return f;
}

}  // namespace

TEST_CASE("crc16 check value and bitwise oracle") {
  const std::string check = "123456789";
  CHECK(crc16_ccitt_false({reinterpret_cast<const std::uint8_t*>(check.data()), check.size()}) == 0x29B1);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::uint8_t> buf(rng() % 300);
    for (auto& b : buf) b = static_cast<std::uint8_t>(rng());
    REQUIRE(crc16_ccitt_false(buf) == crc_bitwise(buf));
  }
}

TEST_CASE("encode layout") {
  Frame f = make_data_frame(3, 7, 0x1234, 0x89ABCDEF, {0xAA, 0xBB});
  f.header.flags = frame_flags::kAckRequested;
  const auto bytes = encode_frame(f);
  REQUIRE(bytes.size() == kFrameOverhead + 2);
  CHECK(bytes[0] == 0);
  CHECK(bytes[1] == 3);
  CHECK(bytes[2] == 7);
  CHECK(bytes[3] == 2);
  CHECK(bytes[4] == 0x34);
  CHECK(bytes[5] == 0x12);
  CHECK(bytes[6] == 0xEF);
  CHECK(bytes[9] == 0x89);
  CHECK(bytes[10] == 2);
  CHECK(bytes[11] == 0);
  CHECK(bytes[12] == 0);
  CHECK(bytes[13] == 0);
  CHECK(bytes[18] == 0xAA);
  const std::uint16_t crc = crc_bitwise(std::span(bytes).first(bytes.size() - 2));
  CHECK(bytes[20] == (crc & 0xFF));
  CHECK(bytes[21] == (crc >> 8));
  CHECK(frame_crc(f) == crc);
}

TEST_CASE("decode inverts encode on random frames") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 10'000; ++i) {
    const Frame f = random_frame(rng);
    const auto bytes = encode_frame(f);
    REQUIRE(bytes.size() == f.encoded_size());
    REQUIRE(decode_frame(bytes) == f);
  }
}

TEST_CASE("every single-bit corruption of a 64-byte frame is detected") {
  std::vector<std::uint8_t> payload(44);
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<std::uint8_t>(i * 13 + 5);
  const auto bytes = encode_frame(make_data_frame(1, 2, 3, 4, payload));
  REQUIRE(bytes.size() == 64);
  for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit) {
    auto bad = bytes;
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    CAPTURE(bit);
    REQUIRE_THROWS_AS(decode_frame(bad), FrameError);
  }
}

TEST_CASE("decode error kinds") {
  const auto good = encode_frame(make_sync_frame(0, 1, 2, 3));
  auto kind = [](std::span<const std::uint8_t> b) {
    try {
      decode_frame(b);
    } catch (const FrameError& e) {
      return e.kind();
    }
    FAIL("decoded");
    return FrameError::Kind::Invariant;
  };
  CHECK(kind(std::span(good).first(10)) == FrameError::Kind::Truncated);
  auto longer = good;
  longer.push_back(0);
  CHECK(kind(longer) == FrameError::Kind::Protocol);
  auto flipped = good;
  flipped[5] ^= 1;
  CHECK(kind(flipped) == FrameError::Kind::Integrity);

  // Field-level errors behind a valid CRC.
  auto with_crc = [](std::vector<std::uint8_t> b) {
    b.resize(b.size() - 2);
    const auto c = crc_bitwise(b);
    b.push_back(static_cast<std::uint8_t>(c));
    b.push_back(static_cast<std::uint8_t>(c >> 8));
    return b;
  };
  auto bad_type = good;
  bad_type[0] = 9;
  CHECK(kind(with_crc(bad_type)) == FrameError::Kind::Protocol);
  auto bad_pad = good;
  bad_pad[12] = 1;
  CHECK(kind(with_crc(bad_pad)) == FrameError::Kind::Protocol);
  CHECK_THROWS_AS(encode_frame(Frame{{FrameType::Ack, 0, 0, 0, 0, 0}, {}, {1}}), FrameError);
}

TEST_CASE("golden frames match independently generated vectors") {
  std::ifstream in(UWB_GOLDEN_DIR "/frames.hex");
  REQUIRE(in.good());
  std::vector<std::pair<std::string, std::string>> golden;
  std::string name, hex;
  while (in >> name >> hex) golden.emplace_back(name, hex);
  const auto frames = reference_frames();
  REQUIRE(golden.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CAPTURE(golden[i].first);
    CHECK(frames[i].first == golden[i].first);
    CHECK(to_hex(encode_frame(frames[i].second)) == golden[i].second);
    CHECK(decode_frame(from_hex(golden[i].second)) == frames[i].second);
  }
}

TEST_CASE("airtime") {
  CHECK(frame_airtime_us(1044, 16'000'000) == 522);
  CHECK(frame_airtime_us(20, 18'000'000) == 9);   // 160 bits / 18 -> 8.9
  CHECK(frame_airtime_us(408, 18'000'000) == 182);
  CHECK(frame_airtime_us(1000, 8'000'000) == 1000);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t bytes = rng() % 5000;
    const std::uint64_t rate = 1'000'000 + rng() % 50'000'000;
    const std::uint64_t t = frame_airtime_us(bytes, rate);
    REQUIRE(t * rate >= bytes * 8 * 1'000'000);
    REQUIRE((t == 0 || (t - 1) * rate < bytes * 8 * 1'000'000));
  }
}

TEST_CASE("hex helpers") {
  const std::vector<std::uint8_t> v{0x00, 0xAB, 0x7F};
  CHECK(to_hex(v) == "00ab7f");
  CHECK(from_hex("00AB7f") == v);
  CHECK_THROWS(from_hex("abc"));
  CHECK_THROWS(from_hex("zz"));
}
