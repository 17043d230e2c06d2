#pragma once

// Wire format (all multi-byte fields little-endian):
//
//   offset  size  field
//   0       1     frame_type      0 = Data, 1 = Sync, 2 = Ack
//   1       1     network_id
//   2       1     connection_id
//   3       1     flags           bit0 retransmission, bit1 ack requested
//   4       2     sequence
//   6       4     timestamp       sender clock, 1 tick = 1 us
//   10      2     payload_len
//   12      2     header_pad      must be zero
//   14      4     mac_reserved    opaque to this layer
//   18      n     payload
//   18+n    2     crc             CRC-16/CCITT-FALSE over bytes [0, 18+n)

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uwbaudio/error.hpp"

namespace uwb {

inline constexpr std::size_t kHeaderLen = 14;
inline constexpr std::size_t kMacReservedLen = 4;
inline constexpr std::size_t kCrcLen = 2;
inline constexpr std::size_t kFrameOverhead = kHeaderLen + kMacReservedLen + kCrcLen;
inline constexpr std::size_t kMaxPayloadLen = 0xFFFF;

enum class FrameType : std::uint8_t { Data = 0, Sync = 1, Ack = 2 };
std::string_view to_string(FrameType type);

namespace frame_flags {
inline constexpr std::uint8_t kRetransmission = 0x01;
inline constexpr std::uint8_t kAckRequested = 0x02;
}  // namespace frame_flags

struct FrameHeader {
  FrameType frame_type = FrameType::Data;
  std::uint8_t network_id = 0;
  std::uint8_t connection_id = 0;
  std::uint8_t flags = 0;
  std::uint16_t sequence = 0;
  std::uint32_t timestamp_ticks = 0;

  friend bool operator==(const FrameHeader&, const FrameHeader&) = default;
};

/// payload_len on the wire is payload.size(); the CRC is always recomputed.
struct Frame {
  FrameHeader header;
  std::array<std::uint8_t, kMacReservedLen> mac_reserved{};
  std::vector<std::uint8_t> payload;

  std::size_t encoded_size() const { return kFrameOverhead + payload.size(); }

  friend bool operator==(const Frame&, const Frame&) = default;
};

class FrameError : public ProtocolError {
 public:
  enum class Kind { Truncated, Integrity, Protocol, Invariant };
  FrameError(Kind kind, const std::string& what) : ProtocolError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

Frame make_data_frame(std::uint8_t network_id, std::uint8_t connection_id, std::uint16_t sequence,
                      std::uint32_t timestamp, std::vector<std::uint8_t> payload);
Frame make_sync_frame(std::uint8_t network_id, std::uint8_t connection_id, std::uint16_t sequence,
                      std::uint32_t timestamp);
Frame make_ack_frame(std::uint8_t network_id, std::uint8_t connection_id, std::uint16_t sequence,
                     std::uint32_t timestamp);

std::vector<std::uint8_t> encode_frame(const Frame& frame);
/// `bytes` must hold exactly one frame.
Frame decode_frame(std::span<const std::uint8_t> bytes);
std::uint16_t frame_crc(const Frame& frame);

/// Airtime rounded up to whole microseconds.
std::uint64_t frame_airtime_us(std::size_t encoded_bytes, std::uint64_t phy_rate_bps);
inline std::uint64_t frame_airtime_us(const Frame& frame, std::uint64_t phy_rate_bps) {
  return frame_airtime_us(frame.encoded_size(), phy_rate_bps);
}

/// Fixed frames covering every type and flag, used as golden vectors.
std::vector<std::pair<std::string, Frame>> reference_frames();

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

}  // namespace uwb
