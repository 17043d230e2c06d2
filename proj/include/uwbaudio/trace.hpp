#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uwb {

enum class EventKind {
  Slot,        // owned slot began, or a contention slot was used; value = duration
  Cca,         // outcome clear / busy / drop
  TxData,      // value = airtime
  TxSync,
  TxAck,
  RxData,      // outcome stored / late / overflow
  RxDup,
  RxSync,
  RxAck,
  Lost,        // frame erased by the channel
  Drop,        // sender gave up on a frame
  AckTimeout,
  Capture,     // seq = block index, time = capture of its first sample
  Playout,     // seq = block index, outcome played / concealed
  SyncLoss,
  Underflow,
};

enum class Outcome {
  None, Ok, Clear, Busy, Drop, Lost, Stored, Late, Overflow, Dup, Timeout, Played, Concealed,
  Owned, Contention,
};

std::string_view to_string(EventKind kind);
std::string_view to_string(Outcome outcome);

struct TraceEvent {
  std::int64_t time_us = 0;
  EventKind kind = EventKind::Slot;
  std::int32_t network = 0;
  std::int32_t connection = 0;
  std::int32_t channel = -1;   // -1 when not applicable
  std::int64_t seq = -1;       // -1 when not applicable
  Outcome outcome = Outcome::None;
  std::int64_t value = -1;     // airtime or duration in us; -1 when absent

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

inline constexpr std::string_view kTraceHeader = "time_us,event,network,connection,channel,seq,outcome";

/// `time_us,event,network,connection,channel,seq,outcome`; absent fields are
/// empty and a value is appended to the outcome as `outcome:value`.
std::string format_trace_line(const TraceEvent& event);
TraceEvent parse_trace_line(std::string_view line);
void write_trace(std::ostream& out, std::span<const TraceEvent> events);
std::vector<TraceEvent> read_trace(std::istream& in);

struct LatencySummary {
  std::uint64_t delivered = 0;
  std::uint64_t concealed = 0;
  std::uint64_t in_flight = 0;  // captured, never reached playout
  double mean_us = 0;
  double p95_us = 0;
  double max_us = 0;
  double min_us = 0;
};

/// Pairs Capture with Playout events by (network, connection, block).
/// Concealed blocks carry no latency; unmatched captures count as in flight.
LatencySummary measure_latency(std::span<const TraceEvent> trace,
                               std::optional<std::int32_t> network = std::nullopt);

/// Transmit airtime (data, sync, ack, retransmissions) over the allocated
/// share: owned slot time plus contention slots the network transmitted in.
double measure_utilization(std::span<const TraceEvent> trace,
                           std::optional<std::int32_t> network = std::nullopt);

}  // namespace uwb
