#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support/schedule_oracle.hpp"
#include "uwbaudio/error.hpp"
#include "uwbaudio/wireless_core.hpp"

using namespace uwb;

namespace {

Connection conn(std::uint8_t id, std::uint64_t bps, bool sync = true) {
  Connection c;
  c.connection_id = id;
  c.required_bitrate_bps = bps;
  c.auto_sync = sync;
  return c;
}

}  // namespace

TEST_CASE("scheduler admission matches brute force") {
  std::mt19937_64 rng(2024);
  int feasible = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = oracle::random_instance(rng);
    const bool expect = oracle::feasible(inst);
    bool got = true;
    Schedule s;
    try {
      s = build_schedule(inst.connections, inst.params);
    } catch (const AdmissionError&) {
      got = false;
    }
    CAPTURE(i);
    REQUIRE(got == expect);
    if (!got) continue;
    ++feasible;
    const std::uint32_t n = inst.params.period_us / inst.params.slot_duration_us;
    REQUIRE(s.slots.size() == n);
    for (const auto& c : inst.connections) {
      REQUIRE(s.owned_slot_count(c.connection_id) == oracle::slots_needed(c, inst.params));
      REQUIRE(slots_required(c, inst.params) == oracle::slots_needed(c, inst.params));
      // The first owned slot is the sync slot.
      auto first = std::find_if(s.slots.begin(), s.slots.end(),
                                [&](const Slot& sl) { return sl.owner == c.connection_id; });
      if (first != s.slots.end()) CHECK(first->sync == c.auto_sync);
      const auto peak = peak_rate_bps(c.connection_id, s, inst.params.slot_capacity_bytes);
      CHECK(peak == std::uint64_t{s.owned_slot_count(c.connection_id)} * inst.params.slot_capacity_bytes * 8 *
                        1'000'000 / inst.params.period_us);
      CHECK(std::uint64_t{s.owned_slot_count(c.connection_id)} * inst.params.slot_capacity_bytes * 8 *
                1'000'000 >=
            c.required_bitrate_bps * inst.params.period_us);
    }
    std::uint32_t syncs = 0;
    for (std::uint32_t k = 0; k < n; ++k) {
      const auto& sl = s.slots[k];
      CHECK(sl.index == k);
      CHECK(sl.start_us == k * inst.params.slot_duration_us);
      CHECK(sl.channel == (k + inst.params.network_id) % inst.params.channel_count);
      if (sl.sync) {
        ++syncs;
        CHECK_FALSE(sl.is_contention());
      }
    }
    CHECK(syncs == s.sync_slot_indices.size());
  }
  CHECK(feasible > 200);
  CHECK(feasible < 950);
}

TEST_CASE("default audio stream needs one slot") {
  ScheduleParams p;
  const Connection c = conn(1, 1'552'000);
  CHECK(slots_required(c, p) == 1);
  const Schedule s = build_schedule(std::span(&c, 1), p);
  CHECK(s.slots.size() == 8);
  CHECK(s.slots[0].owner == std::optional<std::uint8_t>(1));
  CHECK(s.slots[0].sync);
  CHECK(s.sync_slot_indices == std::vector<std::uint32_t>{0});
  CHECK(peak_rate_bps(1, s, p.slot_capacity_bytes) == 1'600'000);
  CHECK_THROWS_AS(peak_rate_bps(9, s, p.slot_capacity_bytes), LookupError);
}

TEST_CASE("slots are spread evenly, higher demand first") {
  ScheduleParams p;
  const std::uint64_t one = 1'600'000;
  std::vector<Connection> cs{conn(2, one * 2), conn(1, one * 4)};
  const Schedule s = build_schedule(cs, p);
  // id 1 (4 slots) -> 0,2,4,6 ; id 2 (2 slots) -> 0->1, 4->5
  std::vector<int> owners;
  for (const auto& sl : s.slots) owners.push_back(sl.owner ? *sl.owner : 0);
  CHECK(owners == std::vector<int>{1, 2, 1, 0, 1, 2, 1, 0});
  CHECK(s.connections == std::vector<std::uint8_t>{1, 2});
}

TEST_CASE("admission error reports the overcommit") {
  ScheduleParams p;
  std::vector<Connection> cs{conn(1, 1'600'000 * 5), conn(2, 1'600'000 * 5)};
  try {
    build_schedule(cs, p);
    FAIL("admitted");
  } catch (const AdmissionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2 slots") != std::string::npos);
    CHECK(msg.find("3200000 bps") != std::string::npos);
  }
}

TEST_CASE("schedule parameter validation") {
  const Connection c = conn(1, 0);
  ScheduleParams p;
  p.period_us = 12'000;
  p.slot_duration_us = 250;
  try {
    build_schedule(std::span(&c, 1), p);
    FAIL("accepted");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "period_us");
  }
  p = {};
  p.slot_duration_us = 300;
  CHECK_THROWS_AS(build_schedule(std::span(&c, 1), p), ValidationError);
  p = {};
  p.slot_capacity_bytes = 800;  // 820 B frame + ack > 250 us at 18 Mbps
  CHECK_THROWS_AS(build_schedule(std::span(&c, 1), p), ValidationError);
  std::vector<Connection> dup{conn(1, 0), conn(1, 0)};
  CHECK_THROWS_AS(build_schedule(dup, ScheduleParams{}), ValidationError);
  CHECK(build_schedule({}, ScheduleParams{}).slots.size() == 8);
}

TEST_CASE("no auto-sync, no demand: admitted without a slot") {
  const Connection c = conn(4, 0, false);
  const Schedule s = build_schedule(std::span(&c, 1), ScheduleParams{});
  CHECK(s.owned_slot_count(4) == 0);
  CHECK(peak_rate_bps(4, s, 400) == 0);
  CHECK(s.sync_slot_indices.empty());
}

TEST_CASE("slot-begin actions") {
  Slot owned{0, 0, 250, std::uint8_t{1}, 0, true};
  Slot plain{1, 250, 250, std::uint8_t{1}, 0, false};
  Slot other{2, 500, 250, std::uint8_t{2}, 0, false};
  Slot free_slot{3, 750, 250, std::nullopt, 0, false};
  Connection c = conn(1, 0);
  CHECK(on_slot_begin(c, owned, 0).kind == TxActionKind::SendSync);
  CHECK(on_slot_begin(c, plain, 0).kind == TxActionKind::NoOp);
  c.auto_sync = false;
  CHECK(on_slot_begin(c, owned, 0).kind == TxActionKind::NoOp);
  c.tx_queue.push_back(TxItem{{1, 2}, 5, 0, false});
  auto a = on_slot_begin(c, owned, 0);
  CHECK(a.kind == TxActionKind::SendData);
  CHECK(a.item == &c.tx_queue.front());
  CHECK(on_slot_begin(c, other, 0).kind == TxActionKind::NoOp);
  CHECK(on_slot_begin(c, free_slot, 0).kind == TxActionKind::NoOp);
  c.tx_queue.front().backlogged = true;
  CHECK(on_slot_begin(c, free_slot, 0).kind == TxActionKind::SendData);
}

TEST_CASE("CCA retry and drop") {
  CcaState st(2);
  auto r = cca_attempt(st, 0, 100, 50);
  CHECK(r.result == CcaResult::Clear);
  CHECK(st.channel_busy_until[0] == 150);
  CHECK(st.channel_busy_until[1] == 0);
  CHECK(cca_attempt(st, 1, 100, 10).result == CcaResult::Clear);

  // Permanently busy channel: exactly max_retries Busy outcomes, then Drop.
  for (int retries : {0, 1, 3, 5}) {
    CcaState busy(1);
    busy.max_retries = retries;
    busy.occupy(0, 1'000'000);
    std::int64_t now = 0;
    int prior = 0;
    std::vector<std::int64_t> times;
    for (;;) {
      auto o = cca_attempt(busy, 0, now, 10, prior);
      if (o.result == CcaResult::Drop) break;
      REQUIRE(o.result == CcaResult::Busy);
      REQUIRE(o.retry_at_us == now + busy.retry_delay_us);
      now = o.retry_at_us;
      ++prior;
    }
    CHECK(prior == retries);
  }

  CcaState edge(1);
  edge.occupy(0, 200);
  CHECK(cca_attempt(edge, 0, 199, 5).result == CcaResult::Busy);
  CHECK(cca_attempt(edge, 0, 200, 5).result == CcaResult::Clear);
  edge.occupy(0, 100);  // never moves busy-until backwards
  CHECK(edge.channel_busy_until[0] == 205);
}

TEST_CASE("sync loss deadline") {
  Connection c = conn(1, 0);
  c.last_tx_time_us = 1000;
  CHECK_FALSE(detect_sync_loss(c, 11'000));
  CHECK(detect_sync_loss(c, 11'001));
}

TEST_CASE("wrapping sequence order") {
  static_assert(sequence_newer(1, 0));
  static_assert(!sequence_newer(0, 0));
  static_assert(sequence_newer(0, 0xFFFF));
  static_assert(!sequence_newer(0xFFFF, 0));
  std::mt19937 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto a = static_cast<std::uint16_t>(rng());
    const auto d = static_cast<std::uint16_t>(1 + rng() % 0x7FFF);
    REQUIRE(sequence_newer(static_cast<std::uint16_t>(a + d), a));
    REQUIRE_FALSE(sequence_newer(a, static_cast<std::uint16_t>(a + d)));
  }
}
