#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "uwbaudio/error.hpp"
#include "uwbaudio/frame_codec.hpp"
#include "uwbaudio/simulator.hpp"

using namespace uwb;

namespace {

ScenarioConfig base(double seconds = 2.0) {
  ScenarioConfig c;
  c.duration_s = seconds;
  return c;
}

// Per-block latency straight from the trace.
std::vector<std::int64_t> block_latencies(const std::vector<TraceEvent>& trace) {
  std::map<std::pair<int, std::int64_t>, std::int64_t> cap;
  std::vector<std::int64_t> out;
  for (const auto& e : trace)
    if (e.kind == EventKind::Capture) cap[{e.network, e.seq}] = e.time_us;
  for (const auto& e : trace)
    if (e.kind == EventKind::Playout && e.outcome == Outcome::Played) out.push_back(e.time_us - cap.at({e.network, e.seq}));
  return out;
}

}  // namespace

TEST_CASE("baseline lossless run") {
  const auto r = run_scenario(base(), 1);
  CHECK(r.metrics.success_rate == 1.0);
  CHECK(r.metrics.blocks_captured == 1000);
  CHECK(r.metrics.blocks_played == 1000);
  CHECK(r.metrics.latency.max_us <= 10'000);
  CHECK(r.metrics.link_utilization >= 0.70);
  CHECK(r.metrics.link_utilization <= 0.82);
  CHECK(r.output_samples == std::vector<std::int32_t>(r.input_samples.begin(),
                                                      r.input_samples.begin() + r.output_samples.size()));
  REQUIRE(r.schedules.size() == 1);
  CHECK(r.schedules[0].owned_slot_count(1) == 1);
}

TEST_CASE("reproducible for a fixed seed") {
  auto c = base(1.0);
  c.loss_prob = 0.05;
  c.drift_ppm = 80;
  c.networks = 2;
  const auto a = run_scenario(c, 77);
  const auto b = run_scenario(c, 77);
  CHECK(a.trace == b.trace);
  CHECK(a.output_samples == b.output_samples);
  CHECK(a.metrics.success_rate == b.metrics.success_rate);
  CHECK(a.metrics.latency.mean_us == b.metrics.latency.mean_us);
  const auto other = run_scenario(c, 78);
  CHECK(other.trace != a.trace);
}

TEST_CASE("block conservation") {
  for (double loss : {0.0, 0.1, 0.3, 0.6}) {
    for (double preset : {5.0, 10.0}) {
      auto c = base(1.0);
      c.loss_prob = loss;
      c.preset_latency_ms = preset;
      c.source = SourceKind::Random;
      const auto r = run_scenario(c, 3);
      const auto& m = r.metrics;
      CAPTURE(loss);
      CAPTURE(preset);
      CHECK(m.blocks_captured == m.blocks_played + m.blocks_concealed + m.blocks_in_flight);
      CHECK(m.success_rate >= 0.0);
      CHECK(m.success_rate <= 1.0);
      CHECK(m.link_utilization >= 0.0);
      CHECK(m.link_utilization <= 1.0);
    }
  }
}

TEST_CASE("more loss never raises the success rate") {
  for (double preset : {5.0, 10.0}) {
    double prev = 1.0;
    for (double loss : {0.0, 0.01, 0.03, 0.1, 0.2, 0.35, 0.5, 0.8}) {
      auto c = base(2.0);
      c.loss_prob = loss;
      c.preset_latency_ms = preset;
      const double s = run_scenario(c, 11, {nullptr, false, false}).metrics.success_rate;
      CAPTURE(loss);
      CHECK(s <= prev);
      prev = s;
    }
    CHECK(prev < 1.0);
  }
}

TEST_CASE("no delivered block is later than the preset") {
  for (double drift : {-200.0, 0.0, 150.0}) {
    for (double preset : {5.0, 10.0, 20.0}) {
      auto c = base(3.0);
      c.drift_ppm = drift;
      c.receiver_drift_ppm = -drift / 2;
      c.clock_offset_us = 12345;
      c.loss_prob = 0.03;
      c.preset_latency_ms = preset;
      const auto r = run_scenario(c, 5);
      const auto lat = block_latencies(r.trace);
      REQUIRE_FALSE(lat.empty());
      CAPTURE(drift);
      CAPTURE(preset);
      CHECK(*std::max_element(lat.begin(), lat.end()) <= c.preset_latency_us());
      CHECK(r.metrics.latency.mean_us >= c.preset_latency_us() - 1500);
    }
  }
}

TEST_CASE("transmissions on one channel never overlap") {
  auto c = base(1.0);
  c.networks = 3;
  c.channels = 1;
  const auto r = run_scenario(c, 2);
  std::map<int, std::vector<std::pair<std::int64_t, std::int64_t>>> by_channel;
  std::size_t busy = 0;
  for (const auto& e : r.trace) {
    if (e.kind == EventKind::TxData || e.kind == EventKind::TxSync || e.kind == EventKind::TxAck)
      by_channel[e.channel].push_back({e.time_us, e.time_us + e.value});
    if (e.kind == EventKind::Cca && e.outcome == Outcome::Busy) ++busy;
  }
  CHECK(busy > 0);
  for (auto& [ch, iv] : by_channel) {
    std::sort(iv.begin(), iv.end());
    for (std::size_t i = 1; i < iv.size(); ++i) REQUIRE(iv[i].first >= iv[i - 1].second);
  }
}

TEST_CASE("two networks on two hop channels both deliver") {
  auto c = base(5.0);
  c.networks = 2;
  c.channels = 2;
  const auto r = run_scenario(c, 9);
  REQUIRE(r.metrics.networks.size() == 2);
  for (const auto& n : r.metrics.networks) CHECK(n.success_rate >= 0.999);
  CHECK(r.schedules[0].slots[0].channel != r.schedules[1].slots[0].channel);
}

TEST_CASE("idle source: utilization is sync overhead only") {
  auto c = base(2.0);
  c.source = SourceKind::Idle;
  const auto r = run_scenario(c, 1);
  std::size_t owned = 0, sync = 0, other = 0;
  for (const auto& e : r.trace) {
    owned += e.kind == EventKind::Slot;
    sync += e.kind == EventKind::TxSync;
    other += e.kind == EventKind::TxData || e.kind == EventKind::TxAck;
  }
  CHECK(other == 0);
  CHECK(sync == owned);
  // 20-byte header-only frame at 18 Mbps: 160 bits -> 9 us after rounding up.
  CHECK(r.metrics.link_utilization == doctest::Approx(9.0 / 250.0));
  CHECK(r.metrics.sync_loss_events == 0);
}

TEST_CASE("idle source without auto-sync loses sync") {
  auto c = base(0.1);
  c.source = SourceKind::Idle;
  c.auto_sync = false;
  const auto r = run_scenario(c, 1);
  CHECK(r.metrics.sync_loss_events == 1);
  auto it = std::find_if(r.trace.begin(), r.trace.end(), [](const TraceEvent& e) { return e.kind == EventKind::SyncLoss; });
  REQUIRE(it != r.trace.end());
  CHECK(it->time_us > kMaxSyncPeriodUs);
  CHECK(it->time_us <= 20'000);
}

TEST_CASE("saturated queue approaches the slot ceiling") {
  auto c = base(2.0);
  c.source = SourceKind::Saturated;
  const auto r = run_scenario(c, 1);
  // Every slot carries one full frame and its ack.
  const double frame_bits = (c.slot_capacity_bytes + 20) * 8.0, ack_bits = 20 * 8.0;
  const double oracle = (std::ceil(frame_bits / 18.0) + std::ceil(ack_bits / 18.0)) / c.slot_us;
  CHECK(r.metrics.link_utilization == doctest::Approx(oracle).epsilon(0.005));
  CHECK(r.metrics.link_utilization <= oracle);
}

TEST_CASE("single block, guard zero: latency equals the preset") {
  auto c = base(0.002);
  c.guard_us = 0;
  c.preset_latency_ms = 10;
  const auto r = run_scenario(c, 1);
  CHECK(r.metrics.blocks_played == 1);
  CHECK(r.metrics.latency.mean_us == 10'000);
}

TEST_CASE("loss is recovered by retransmission") {
  auto c = base(10.0);
  c.loss_prob = 0.01;
  const auto r = run_scenario(c, 4);
  CHECK(r.metrics.retransmissions > 0);
  CHECK(r.metrics.frames_lost > 0);
  CHECK(r.metrics.success_rate >= 0.999);
  c.auto_reply = false;
  const auto no_ack = run_scenario(c, 4);
  CHECK(no_ack.metrics.retransmissions == 0);
  CHECK(no_ack.metrics.acks_sent == 0);
  CHECK(no_ack.metrics.success_rate < 0.999);
}

TEST_CASE("WAV input overrides the format and plays back bit exact") {
  WavData w;
  w.format = {96000, 24, 2};
  for (int i = 0; i < 96000 / 10 + 17; ++i) {  // not a whole number of blocks
    w.samples.push_back((i * 7919) % 8388607 - 4194303);
    w.samples.push_back(-(i * 131) % 1000000);
  }
  auto c = base();
  const auto r = run_scenario(c, 1, {&w, true, true});
  CHECK(r.format == w.format);
  CHECK(r.source_frames == w.samples.size() / 2);
  CHECK(r.output_samples == w.samples);
  CHECK(r.schedules[0].owned_slot_count(1) == 3);
}

TEST_CASE("infeasible demand is rejected before simulating") {
  auto c = base();
  c.audio = {192000, 24, 8};
  CHECK_THROWS_AS(run_scenario(c, 1), AdmissionError);
  c = base();
  c.phy_profile = "nope";
  CHECK_THROWS_AS(run_scenario(c, 1), ConfigError);
}

TEST_CASE("loss draws are uniform-ish and keyed on every field") {
  double sum = 0;
  for (std::uint32_t i = 0; i < 20000; ++i) sum += loss_draw(1, 0, 1, 0, i, 0);
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
  CHECK(loss_draw(1, 0, 1, 0, 5, 0) != loss_draw(1, 0, 1, 0, 5, 1));
  CHECK(loss_draw(1, 0, 1, 0, 5, 0) != loss_draw(2, 0, 1, 0, 5, 0));
  CHECK(loss_draw(1, 0, 1, 0, 5, 0) != loss_draw(1, 1, 1, 0, 5, 0));
  CHECK(loss_draw(1, 0, 1, 0, 5, 0) != loss_draw(1, 0, 1, 2, 5, 0));
}

TEST_CASE("stream bit rate counts the frame-index prefix") {
  CHECK(stream_bitrate_bps({48000, 16, 2}, 96, 2000, 400) == (384 + 4) * 8 * 500);
  CHECK(stream_bitrate_bps({96000, 24, 2}, 192, 2000, 400) == (1152 + 3 * 4) * 8 * 500);
}
