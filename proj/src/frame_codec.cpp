#include "uwbaudio/frame_codec.hpp"

#include <stdexcept>

#include "uwbaudio/crc16.hpp"

namespace uwb {
namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint32_t{b[at]} | (std::uint32_t{b[at + 1]} << 8) | (std::uint32_t{b[at + 2]} << 16) |
         (std::uint32_t{b[at + 3]} << 24);
}

}  // namespace

std::string_view to_string(FrameType type) {
  switch (type) {
    case FrameType::Data: return "data";
    case FrameType::Sync: return "sync";
    case FrameType::Ack: return "ack";
  }
  return "unknown";
}

Frame make_data_frame(std::uint8_t network_id, std::uint8_t connection_id, std::uint16_t sequence,
                      std::uint32_t timestamp, std::vector<std::uint8_t> payload) {
  Frame f;
  f.header = {FrameType::Data, network_id, connection_id, 0, sequence, timestamp};
  f.payload = std::move(payload);
  return f;
}

Frame make_sync_frame(std::uint8_t network_id, std::uint8_t connection_id, std::uint16_t sequence,
                      std::uint32_t timestamp) {
  Frame f;
  f.header = {FrameType::Sync, network_id, connection_id, 0, sequence, timestamp};
  return f;
}

Frame make_ack_frame(std::uint8_t network_id, std::uint8_t connection_id, std::uint16_t sequence,
                     std::uint32_t timestamp) {
  Frame f;
  f.header = {FrameType::Ack, network_id, connection_id, 0, sequence, timestamp};
  return f;
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  if (frame.header.frame_type == FrameType::Ack && !frame.payload.empty()) {
    throw FrameError(FrameError::Kind::Invariant, "ack frame must not carry a payload");
  }
  if (frame.payload.size() > kMaxPayloadLen) {
    throw FrameError(FrameError::Kind::Invariant, "payload exceeds 65535 bytes");
  }
  std::vector<std::uint8_t> out;
  out.reserve(frame.encoded_size());
  const auto& h = frame.header;
  out.push_back(static_cast<std::uint8_t>(h.frame_type));
  out.push_back(h.network_id);
  out.push_back(h.connection_id);
  out.push_back(h.flags);
  put_u16(out, h.sequence);
  put_u32(out, h.timestamp_ticks);
  put_u16(out, static_cast<std::uint16_t>(frame.payload.size()));
  put_u16(out, 0);
  out.insert(out.end(), frame.mac_reserved.begin(), frame.mac_reserved.end());
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  put_u16(out, crc16_ccitt_false(out));
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameOverhead) {
    throw FrameError(FrameError::Kind::Truncated,
                     "frame truncated: " + std::to_string(bytes.size()) + " bytes");
  }
  const std::size_t payload_len = get_u16(bytes, 10);
  const std::size_t expected = kFrameOverhead + payload_len;
  if (bytes.size() < expected) {
    throw FrameError(FrameError::Kind::Truncated, "frame truncated: have " +
                                                      std::to_string(bytes.size()) + ", need " +
                                                      std::to_string(expected));
  }
  if (bytes.size() > expected) {
    throw FrameError(FrameError::Kind::Protocol, "length mismatch: have " +
                                                     std::to_string(bytes.size()) + ", header says " +
                                                     std::to_string(expected));
  }
  const std::size_t body = expected - kCrcLen;
  if (crc16_ccitt_false(bytes.first(body)) != get_u16(bytes, body)) {
    throw FrameError(FrameError::Kind::Integrity, "crc mismatch");
  }
  if (bytes[0] > static_cast<std::uint8_t>(FrameType::Ack)) {
    throw FrameError(FrameError::Kind::Protocol, "unknown frame type " + std::to_string(bytes[0]));
  }
  if (get_u16(bytes, 12) != 0) {
    throw FrameError(FrameError::Kind::Protocol, "nonzero header pad");
  }
  Frame f;
  f.header.frame_type = static_cast<FrameType>(bytes[0]);
  f.header.network_id = bytes[1];
  f.header.connection_id = bytes[2];
  f.header.flags = bytes[3];
  f.header.sequence = get_u16(bytes, 4);
  f.header.timestamp_ticks = get_u32(bytes, 6);
  if (f.header.frame_type == FrameType::Ack && payload_len != 0) {
    throw FrameError(FrameError::Kind::Protocol, "ack frame with payload");
  }
  for (std::size_t i = 0; i < kMacReservedLen; ++i) f.mac_reserved[i] = bytes[kHeaderLen + i];
  auto payload = bytes.subspan(kHeaderLen + kMacReservedLen, payload_len);
  f.payload.assign(payload.begin(), payload.end());
  return f;
}

std::uint16_t frame_crc(const Frame& frame) {
  auto bytes = encode_frame(frame);
  return get_u16(bytes, bytes.size() - kCrcLen);
}

std::uint64_t frame_airtime_us(std::size_t encoded_bytes, std::uint64_t phy_rate_bps) {
  if (phy_rate_bps == 0) throw ValidationError("phy_rate_bps", "must be positive");
  const std::uint64_t bit_us = std::uint64_t{encoded_bytes} * 8 * 1'000'000;
  return (bit_us + phy_rate_bps - 1) / phy_rate_bps;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw ProtocolError("odd-length hex string");
  std::vector<std::uint8_t> out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw ProtocolError("invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

std::vector<std::pair<std::string, Frame>> reference_frames() {
  std::vector<std::pair<std::string, Frame>> out;
  std::vector<std::uint8_t> ramp(16);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<std::uint8_t>(i);
  Frame data = make_data_frame(3, 7, 0x1234, 0x89ABCDEF, ramp);
  data.header.flags = frame_flags::kAckRequested;
  out.emplace_back("data_ack_requested", data);

  out.emplace_back("sync", make_sync_frame(1, 2, 0xFFFF, 1000));
  out.emplace_back("ack", make_ack_frame(0, 1, 42, 0xFFFFFFFF));

  std::vector<std::uint8_t> big(44);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<std::uint8_t>(i * 37);
  Frame retx = make_data_frame(0, 1, 7, 123456, big);
  retx.header.flags = frame_flags::kRetransmission | frame_flags::kAckRequested;
  retx.mac_reserved = {1, 2, 3, 4};
  out.emplace_back("data_retransmission_64B", retx);

  out.emplace_back("data_empty", make_data_frame(255, 255, 0, 0, {}));
  return out;
}

}  // namespace uwb
