#include "uwbaudio/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "uwbaudio/error.hpp"

namespace uwb {
namespace {

constexpr std::array<std::string_view, 16> kKindNames = {
    "slot",    "cca",     "tx_data",     "tx_sync", "tx_ack",  "rx_data",   "rx_dup",   "rx_sync",
    "rx_ack",  "lost",    "drop",        "ack_timeout", "capture", "playout", "sync_loss", "underflow"};

constexpr std::array<std::string_view, 15> kOutcomeNames = {
    "",       "ok",  "clear",   "busy",   "drop",      "lost",  "stored", "late",
    "overflow", "dup", "timeout", "played", "concealed", "owned", "contention"};

template <typename Enum, std::size_t N>
Enum lookup(const std::array<std::string_view, N>& names, std::string_view text, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  throw ProtocolError(std::string("unknown trace ") + what + " '" + std::string(text) + "'");
}

std::int64_t parse_int(std::string_view text, std::int64_t absent) {
  if (text.empty()) return absent;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ProtocolError("bad integer in trace: '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t block_key(std::int32_t network, std::int32_t connection, std::int64_t seq) {
  return (static_cast<std::uint64_t>(network & 0xFFFF) << 48) |
         (static_cast<std::uint64_t>(connection & 0xFFFF) << 32) |
         (static_cast<std::uint64_t>(seq) & 0xFFFFFFFFull);
}

}  // namespace

std::string_view to_string(EventKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }
std::string_view to_string(Outcome outcome) {
  return kOutcomeNames.at(static_cast<std::size_t>(outcome));
}

std::string format_trace_line(const TraceEvent& e) {
  std::string line = std::to_string(e.time_us);
  line += ',';
  line += to_string(e.kind);
  line += ',' + std::to_string(e.network) + ',' + std::to_string(e.connection) + ',';
  if (e.channel >= 0) line += std::to_string(e.channel);
  line += ',';
  if (e.seq >= 0) line += std::to_string(e.seq);
  line += ',';
  line += to_string(e.outcome);
  if (e.value >= 0) line += ':' + std::to_string(e.value);
  return line;
}

TraceEvent parse_trace_line(std::string_view line) {
  std::array<std::string_view, 7> fields;
  std::size_t n = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      if (n == fields.size()) throw ProtocolError("too many fields in trace line");
      fields[n++] = line.substr(start, i - start);
      start = i + 1;
    }
  }
  if (n != fields.size()) throw ProtocolError("trace line needs 7 fields");
  TraceEvent e;
  e.time_us = parse_int(fields[0], 0);
  e.kind = lookup<EventKind>(kKindNames, fields[1], "event");
  e.network = static_cast<std::int32_t>(parse_int(fields[2], 0));
  e.connection = static_cast<std::int32_t>(parse_int(fields[3], 0));
  e.channel = static_cast<std::int32_t>(parse_int(fields[4], -1));
  e.seq = parse_int(fields[5], -1);
  std::string_view outcome = fields[6];
  if (auto colon = outcome.find(':'); colon != std::string_view::npos) {
    e.value = parse_int(outcome.substr(colon + 1), -1);
    outcome = outcome.substr(0, colon);
  }
  e.outcome = lookup<Outcome>(kOutcomeNames, outcome, "outcome");
  return e;
}

void write_trace(std::ostream& out, std::span<const TraceEvent> events) {
  out << kTraceHeader << '\n';
  for (const auto& e : events) out << format_trace_line(e) << '\n';
}

std::vector<TraceEvent> read_trace(std::istream& in) {
  std::vector<TraceEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line == kTraceHeader) continue;
    events.push_back(parse_trace_line(line));
  }
  return events;
}

LatencySummary measure_latency(std::span<const TraceEvent> trace,
                               std::optional<std::int32_t> network) {
  std::unordered_map<std::uint64_t, std::int64_t> captures;
  std::vector<double> latencies;
  LatencySummary summary;
  for (const auto& e : trace) {
    if (network && e.network != *network) continue;
    if (e.kind == EventKind::Capture) {
      captures[block_key(e.network, e.connection, e.seq)] = e.time_us;
    }
  }
  for (const auto& e : trace) {
    if (network && e.network != *network) continue;
    if (e.kind != EventKind::Playout) continue;
    auto it = captures.find(block_key(e.network, e.connection, e.seq));
    if (it == captures.end()) continue;
    if (e.outcome == Outcome::Played) {
      latencies.push_back(static_cast<double>(e.time_us - it->second));
      ++summary.delivered;
    } else {
      ++summary.concealed;
    }
    captures.erase(it);
  }
  summary.in_flight = captures.size();
  if (!latencies.empty()) {
    double sum = 0;
    for (double l : latencies) sum += l;
    summary.mean_us = sum / static_cast<double>(latencies.size());
    std::sort(latencies.begin(), latencies.end());
    summary.min_us = latencies.front();
    summary.max_us = latencies.back();
    const auto rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(latencies.size()))) - 1;
    summary.p95_us = latencies[std::min(rank, latencies.size() - 1)];
  }
  return summary;
}

double measure_utilization(std::span<const TraceEvent> trace, std::optional<std::int32_t> network) {
  std::int64_t airtime = 0;
  std::int64_t allocated = 0;
  for (const auto& e : trace) {
    if (network && e.network != *network) continue;
    switch (e.kind) {
      case EventKind::TxData:
      case EventKind::TxSync:
      case EventKind::TxAck:
        if (e.value > 0) airtime += e.value;
        break;
      case EventKind::Slot:
        if (e.value > 0) allocated += e.value;
        break;
      default:
        break;
    }
  }
  if (allocated == 0) return 0.0;
  return static_cast<double>(airtime) / static_cast<double>(allocated);
}

}  // namespace uwb
