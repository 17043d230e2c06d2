#include "uwbaudio/wireless_core.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "uwbaudio/error.hpp"
#include "uwbaudio/frame_codec.hpp"

namespace uwb {

std::uint32_t Schedule::owned_slot_count(std::uint8_t connection_id) const {
  return static_cast<std::uint32_t>(std::count_if(
      slots.begin(), slots.end(), [&](const Slot& s) { return s.owner == connection_id; }));
}

std::uint32_t slots_required(const Connection& connection, const ScheduleParams& params) {
  const std::uint64_t bits_per_slot = std::uint64_t{params.slot_capacity_bytes} * 8;
  const std::uint64_t demand_bits_x1e6 = connection.required_bitrate_bps * params.period_us;
  const std::uint64_t per_slot_x1e6 = bits_per_slot * 1'000'000;
  auto needed = static_cast<std::uint32_t>((demand_bits_x1e6 + per_slot_x1e6 - 1) / per_slot_x1e6);
  if (connection.auto_sync) needed = std::max<std::uint32_t>(needed, 1);
  return needed;
}

Schedule build_schedule(std::span<const Connection> connections, const ScheduleParams& params) {
  if (params.period_us == 0 || params.period_us > kMaxSyncPeriodUs) {
    throw ValidationError("period_us", "must be in (0, 10000], got " + std::to_string(params.period_us));
  }
  if (params.slot_duration_us == 0 || params.period_us % params.slot_duration_us != 0) {
    throw ValidationError("slot_duration_us", "must divide the period evenly");
  }
  if (params.slot_capacity_bytes == 0) {
    throw ValidationError("slot_capacity_bytes", "must be positive");
  }
  if (params.phy_rate_bps == 0) throw ValidationError("phy_rate_bps", "must be positive");
  if (params.channel_count == 0) throw ValidationError("channel_count", "must be positive");
  const std::uint64_t exchange_us =
      frame_airtime_us(kFrameOverhead + params.slot_capacity_bytes, params.phy_rate_bps) +
      frame_airtime_us(kFrameOverhead, params.phy_rate_bps);
  if (exchange_us > params.slot_duration_us) {
    throw ValidationError("slot_capacity_bytes",
                          "a full slot needs " + std::to_string(exchange_us) +
                              " us of airtime with its ack, slot is " +
                              std::to_string(params.slot_duration_us) + " us");
  }

  std::set<std::uint8_t> ids;
  for (const auto& c : connections) {
    if (!ids.insert(c.connection_id).second) {
      throw ValidationError("connection_id", "duplicate id " + std::to_string(c.connection_id));
    }
  }

  const std::uint32_t slot_count = params.period_us / params.slot_duration_us;
  std::vector<std::uint32_t> order(connections.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& ca = connections[a];
    const auto& cb = connections[b];
    if (ca.required_bitrate_bps != cb.required_bitrate_bps) {
      return ca.required_bitrate_bps > cb.required_bitrate_bps;
    }
    return ca.connection_id < cb.connection_id;
  });

  std::vector<std::uint32_t> need(connections.size());
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < connections.size(); ++i) {
    need[i] = slots_required(connections[i], params);
    total += need[i];
  }
  if (total > slot_count) {
    const std::uint64_t over = total - slot_count;
    const std::uint64_t over_bps =
        over * params.slot_capacity_bytes * 8 * 1'000'000 / params.period_us;
    throw AdmissionError("admission rejected: demand of " + std::to_string(total) +
                         " slots exceeds " + std::to_string(slot_count) +
                         " available per period; overcommitted by " + std::to_string(over) +
                         " slots (" + std::to_string(over_bps) + " bps)");
  }

  Schedule schedule;
  schedule.network_id = params.network_id;
  schedule.period_us = params.period_us;
  schedule.slots.resize(slot_count);
  for (std::uint32_t i = 0; i < slot_count; ++i) {
    auto& s = schedule.slots[i];
    s.index = i;
    s.start_us = i * params.slot_duration_us;
    s.duration_us = params.slot_duration_us;
    s.channel = (i + params.network_id) % params.channel_count;
  }

  for (std::uint32_t idx : order) {
    const auto& c = connections[idx];
    schedule.connections.push_back(c.connection_id);
    const std::uint32_t k = need[idx];
    std::optional<std::uint32_t> first;
    for (std::uint32_t j = 0; j < k; ++j) {
      std::uint32_t pos = static_cast<std::uint32_t>(std::uint64_t{j} * slot_count / k);
      while (schedule.slots[pos].owner.has_value()) pos = (pos + 1) % slot_count;
      schedule.slots[pos].owner = c.connection_id;
      if (!first || pos < *first) first = pos;
    }
    if (c.auto_sync && first) {
      schedule.slots[*first].sync = true;
    }
  }
  for (const auto& s : schedule.slots) {
    if (s.sync) schedule.sync_slot_indices.push_back(s.index);
  }
  return schedule;
}

std::uint64_t peak_rate_bps(std::uint8_t connection_id, const Schedule& schedule,
                            std::uint32_t slot_capacity_bytes) {
  if (std::find(schedule.connections.begin(), schedule.connections.end(), connection_id) ==
      schedule.connections.end()) {
    throw LookupError("connection " + std::to_string(connection_id) + " not in schedule");
  }
  if (schedule.period_us == 0) throw ValidationError("period_us", "must be positive");
  const std::uint64_t bits =
      std::uint64_t{schedule.owned_slot_count(connection_id)} * slot_capacity_bytes * 8;
  return bits * 1'000'000 / schedule.period_us;
}

TxAction on_slot_begin(const Connection& connection, const Slot& slot, std::int64_t now_us) {
  (void)now_us;
  if (slot.is_contention()) {
    if (!connection.tx_queue.empty() && connection.tx_queue.front().backlogged) {
      return {TxActionKind::SendData, &connection.tx_queue.front()};
    }
    return {};
  }
  if (slot.owner != connection.connection_id) return {};
  if (!connection.tx_queue.empty()) {
    return {TxActionKind::SendData, &connection.tx_queue.front()};
  }
  if (connection.auto_sync && slot.sync) return {TxActionKind::SendSync, nullptr};
  return {};
}

void CcaState::occupy(std::uint32_t channel, std::int64_t until_us) {
  auto& busy = channel_busy_until.at(channel);
  busy = std::max(busy, until_us);
}

CcaOutcome cca_attempt(CcaState& state, std::uint32_t channel, std::int64_t now_us,
                       std::int64_t airtime_us, int prior_busy) {
  if (state.channel_busy_until.at(channel) <= now_us) {
    state.occupy(channel, now_us + airtime_us);
    return {CcaResult::Clear, 0};
  }
  if (prior_busy + 1 > state.max_retries) return {CcaResult::Drop, 0};
  return {CcaResult::Busy, now_us + state.retry_delay_us};
}

bool detect_sync_loss(const Connection& connection, std::int64_t now_us) {
  return now_us - connection.last_tx_time_us > kMaxSyncPeriodUs;
}

}  // namespace uwb
