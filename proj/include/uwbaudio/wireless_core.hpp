#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace uwb {

/// Longest gap between two transmissions on a connection before the receiver
/// loses synchronization.
inline constexpr std::int64_t kMaxSyncPeriodUs = 10'000;

struct TxItem {
  std::vector<std::uint8_t> payload;
  std::uint16_t sequence = 0;
  int attempts = 0;
  // Set once the item has failed an exchange or sat through an owned slot;
  // only backlogged items may use contention slots.
  bool backlogged = false;
};

struct Connection {
  std::uint8_t connection_id = 0;
  std::uint8_t network_id = 0;
  std::deque<TxItem> tx_queue;
  bool auto_sync = true;
  bool auto_reply = true;
  std::uint64_t required_bitrate_bps = 0;
  std::int64_t last_tx_time_us = 0;
};

struct Slot {
  std::uint32_t index = 0;
  std::uint32_t start_us = 0;
  std::uint32_t duration_us = 0;
  std::optional<std::uint8_t> owner;  // nullopt: contention slot
  std::uint32_t channel = 0;
  bool sync = false;

  bool is_contention() const { return !owner.has_value(); }
  friend bool operator==(const Slot&, const Slot&) = default;
};

struct Schedule {
  std::uint8_t network_id = 0;
  std::uint32_t period_us = 0;
  std::vector<Slot> slots;
  std::vector<std::uint32_t> sync_slot_indices;
  std::vector<std::uint8_t> connections;  // admitted, including those owning no slot

  std::uint32_t owned_slot_count(std::uint8_t connection_id) const;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct ScheduleParams {
  std::uint32_t period_us = 2000;
  std::uint32_t slot_duration_us = 250;
  std::uint32_t slot_capacity_bytes = 400;
  std::uint64_t phy_rate_bps = 18'000'000;
  std::uint32_t channel_count = 1;
  std::uint8_t network_id = 0;
};

/// Slots a connection needs per period: enough payload capacity for its
/// required bit rate, and at least one if it runs auto-sync.
std::uint32_t slots_required(const Connection& connection, const ScheduleParams& params);

/// Builds one network's superframe. Connections are served in order of
/// (required bit rate desc, id asc); each one's slots are spread evenly over
/// the period and its first slot becomes its sync slot. Unassigned slots are
/// contention slots. Slot i hops to channel (i + network_id) % channel_count.
/// Throws ValidationError for malformed parameters and AdmissionError when
/// demand exceeds the slots available.
Schedule build_schedule(std::span<const Connection> connections, const ScheduleParams& params);

/// owned slots x capacity x 8 / period. Throws LookupError if the connection
/// was not admitted to the schedule.
std::uint64_t peak_rate_bps(std::uint8_t connection_id, const Schedule& schedule,
                            std::uint32_t slot_capacity_bytes);

enum class TxActionKind { NoOp, SendData, SendSync };

struct TxAction {
  TxActionKind kind = TxActionKind::NoOp;
  const TxItem* item = nullptr;  // set for SendData
};

TxAction on_slot_begin(const Connection& connection, const Slot& slot, std::int64_t now_us);

struct CcaState {
  std::vector<std::int64_t> channel_busy_until;
  std::int64_t retry_delay_us = 64;
  int max_retries = 3;

  explicit CcaState(std::size_t channels = 1) : channel_busy_until(channels, 0) {}
  void occupy(std::uint32_t channel, std::int64_t until_us);
};

enum class CcaResult { Clear, Busy, Drop };

struct CcaOutcome {
  CcaResult result = CcaResult::Clear;
  std::int64_t retry_at_us = 0;  // valid for Busy
};

/// `prior_busy` counts consecutive Busy outcomes already seen for this frame.
/// Clear marks the channel busy for the frame's airtime. The frame is dropped
/// once the initial attempt and all max_retries retries found the channel busy.
CcaOutcome cca_attempt(CcaState& state, std::uint32_t channel, std::int64_t now_us,
                       std::int64_t airtime_us, int prior_busy = 0);

bool detect_sync_loss(const Connection& connection, std::int64_t now_us);

/// Wrapping 16-bit sequence comparison: true if `a` is newer than `b`.
constexpr bool sequence_newer(std::uint16_t a, std::uint16_t b) {
  return a != b && static_cast<std::uint16_t>(a - b) < 0x8000;
}

}  // namespace uwb
