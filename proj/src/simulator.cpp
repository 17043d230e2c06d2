#include "uwbaudio/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "uwbaudio/audio_core.hpp"
#include "uwbaudio/error.hpp"
#include "uwbaudio/frame_codec.hpp"

namespace uwb {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double loss_draw(std::uint64_t seed, std::uint32_t network, std::uint32_t connection,
                 std::uint32_t frame_type, std::uint32_t sequence, std::uint32_t attempt) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (std::uint64_t{network} << 32 | connection));
  h = splitmix64(h ^ (std::uint64_t{frame_type} << 48 | std::uint64_t{sequence} << 16 | attempt));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::uint64_t stream_bitrate_bps(const AudioFormat& format, std::uint32_t block_frames,
                                 std::uint32_t block_us, std::uint32_t slot_capacity_bytes) {
  if (slot_capacity_bytes <= 4) throw ConfigError("key 'slot_capacity_bytes': too small for audio");
  AudioBlock probe{format, std::vector<std::int32_t>(std::size_t{block_frames} * format.channels, 0), 0};
  std::uint64_t bytes = 0;
  for (const auto& p : pack_audio(probe, slot_capacity_bytes - 4)) bytes += 4 + p.bytes.size();
  return (bytes * 8 * 1'000'000 + block_us - 1) / block_us;
}

namespace {

constexpr std::uint8_t kConnectionId = 1;

enum class EvKind { SlotBegin, FrameArrive, AckTimeout, CcaRetry, BlockReady, PlayoutTick };

int priority(EvKind k) {
  switch (k) {
    case EvKind::FrameArrive: return 0;
    case EvKind::SlotBegin:
    case EvKind::AckTimeout:
    case EvKind::CcaRetry: return 1;
    case EvKind::BlockReady:
    case EvKind::PlayoutTick: return 2;
  }
  return 2;
}

struct Event {
  std::int64_t time = 0;
  int prio = 0;
  std::uint64_t order = 0;
  EvKind kind = EvKind::SlotBegin;
  std::uint32_t net = 0;
  std::int64_t a = 0;  // slot: period index; tick: tick index; block: index; timeout: attempt
  std::int64_t b = 0;  // slot index; retry: prior busy count; timeout: sequence
  bool sync = false;   // CcaRetry carries a sync frame
  std::vector<std::uint8_t> bytes;
};

struct Later {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    if (x.prio != y.prio) return x.prio > y.prio;
    return x.order > y.order;
  }
};

struct NetState {
  Schedule schedule;
  Connection conn;
  std::uint16_t data_seq = 0;
  std::uint16_t sync_seq = 0;
  bool exchange_pending = false;
  std::uint16_t pending_seq = 0;
  bool sync_lost = false;
  std::int64_t contention_marked = -1;  // global slot serial already traced as used
  std::int64_t next_frame_index = 0;

  std::optional<PlayoutEngine> engine;
  bool have_ref = false;
  double ref_sender_us = 0;
  double ref_local_us = 0;
  bool playout_scheduled = false;
  bool playout_done = false;
  double first_tick_local = 0;
  std::optional<std::uint16_t> last_data_seq;
  std::vector<std::int32_t> output;
};

class Simulation {
 public:
  Simulation(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opt)
      : cfg_(cfg), seed_(seed), opt_(opt), cca_(cfg.channels) {
    cca_.retry_delay_us = cfg.retry_delay_us;
    cca_.max_retries = cfg.max_retries;
    ds_ = cfg.drift_ppm * 1e-6;
    dr_ = cfg.receiver_drift_ppm * 1e-6;
    offset_ = static_cast<double>(cfg.clock_offset_us);
    rate_ = cfg.phy_rate_bps();
    format_ = opt.input ? opt.input->format : cfg.audio;
    validate(format_);
    block_frames_ = static_cast<std::uint32_t>(std::uint64_t{format_.sampling_rate_hz} * cfg.block_us / 1'000'000);
    if (block_frames_ == 0 ||
        std::uint64_t{block_frames_} * 1'000'000 != std::uint64_t{format_.sampling_rate_hz} * cfg.block_us) {
      throw ConfigError("key 'audio.block_us': block must hold a whole number of sample frames");
    }
    tick_frames_ = static_cast<std::uint32_t>(std::uint64_t{format_.sampling_rate_hz} * cfg.tick_us / 1'000'000);
    if (tick_frames_ == 0 ||
        std::uint64_t{tick_frames_} * 1'000'000 != std::uint64_t{format_.sampling_rate_hz} * cfg.tick_us) {
      throw ConfigError("key 'audio.tick_us': tick must hold a whole number of sample frames");
    }
    ack_air_ = static_cast<std::int64_t>(frame_airtime_us(kFrameOverhead, rate_));
    target_us_ = static_cast<double>(cfg.preset_latency_us() - cfg.guard_us);
    target_frames_ = target_us_ * format_.sampling_rate_hz / 1e6;
    prop_ = cfg.propagation_delay_us;

    const bool audio = cfg.source != SourceKind::Idle;
    if (opt.input) {
      source_frames_ = opt.input->samples.size() / format_.channels;
    } else if (audio) {
      source_frames_ = static_cast<std::size_t>(std::llround(cfg.duration_s * format_.sampling_rate_hz));
    }
    if (cfg.source == SourceKind::Saturated && !opt.input) source_frames_ = 0;
    blocks_ = (source_frames_ + block_frames_ - 1) / block_frames_;
    saturated_ = cfg.source == SourceKind::Saturated && !opt.input;

    const auto duration_us = static_cast<std::int64_t>(std::llround(cfg.duration_s * 1e6));
    const std::int64_t capture_end =
        blocks_ ? from_sender(static_cast<double>(blocks_) * cfg.block_us) : duration_us;
    saturated_until_ = duration_us;
    end_us_ = std::max(capture_end, duration_us) + cfg.preset_latency_us() + 20'000;

    build_source();

    std::uint64_t demand = 0;
    if (audio) demand = stream_bitrate_bps(format_, block_frames_, cfg.block_us, cfg.slot_capacity_bytes);
    nets_.resize(cfg.networks);
    for (std::uint32_t n = 0; n < cfg.networks; ++n) {
      auto& ns = nets_[n];
      ns.conn.connection_id = kConnectionId;
      ns.conn.network_id = static_cast<std::uint8_t>(n);
      ns.conn.auto_sync = cfg.auto_sync;
      ns.conn.auto_reply = cfg.auto_reply;
      ns.conn.required_bitrate_bps = demand;
      ScheduleParams params;
      params.period_us = cfg.period_us;
      params.slot_duration_us = cfg.slot_us;
      params.slot_capacity_bytes = cfg.slot_capacity_bytes;
      params.phy_rate_bps = rate_;
      params.channel_count = cfg.channels;
      params.network_id = static_cast<std::uint8_t>(n);
      ns.schedule = build_schedule(std::span<const Connection>(&ns.conn, 1), params);

      PlayoutConfig pc;
      pc.format = format_;
      pc.block_frames = block_frames_;
      pc.tick_frames = tick_frames_;
      pc.tick_us = cfg.tick_us;
      pc.target_occupancy_frames = target_frames_;
      pc.capacity_frames = static_cast<std::size_t>(2 * target_frames_) + 8 * block_frames_ +
                           static_cast<std::size_t>(std::uint64_t{format_.sampling_rate_hz} * cfg.period_us / 500'000);
      pc.policy = cfg.conceal;
      pc.drift_compensation = cfg.drift_compensation;
      ns.engine.emplace(pc);
      ns.engine->set_stream_end(static_cast<std::int64_t>(blocks_) * block_frames_);
      if (blocks_ == 0) ns.playout_done = true;
    }
  }

  RunResult run() {
    for (std::uint32_t n = 0; n < nets_.size(); ++n) {
      push(from_sender(0), EvKind::SlotBegin, n, 0, 0);
      for (std::size_t b = 0; b < blocks_; ++b) {
        push(from_sender(static_cast<double>(b + 1) * cfg_.block_us), EvKind::BlockReady, n,
             static_cast<std::int64_t>(b), 0);
      }
      if (saturated_) top_up(nets_[n]);
    }
    while (!queue_.empty()) {
      std::pop_heap(queue_.begin(), queue_.end(), Later{});
      Event ev = std::move(queue_.back());
      queue_.pop_back();
      now_ = ev.time;
      switch (ev.kind) {
        case EvKind::SlotBegin: on_slot(ev); break;
        case EvKind::FrameArrive: on_arrive(ev); break;
        case EvKind::AckTimeout: on_timeout(ev); break;
        case EvKind::CcaRetry: on_retry(ev); break;
        case EvKind::BlockReady: on_block(ev); break;
        case EvKind::PlayoutTick: on_tick(ev); break;
      }
    }
    return finish();
  }

 private:
  // --- clocks -----------------------------------------------------------------
  std::int64_t from_sender(double local) const { return std::llround(local / (1.0 + ds_)); }
  double sender_local(std::int64_t t) const { return static_cast<double>(t) * (1.0 + ds_); }
  std::int64_t from_receiver(double local) const { return std::llround((local - offset_) / (1.0 + dr_)); }
  double receiver_local(std::int64_t t) const { return offset_ + static_cast<double>(t) * (1.0 + dr_); }

  void push(std::int64_t time, EvKind kind, std::uint32_t net, std::int64_t a, std::int64_t b,
            std::vector<std::uint8_t> bytes = {}, bool sync = false) {
    Event ev;
    ev.time = std::max(time, now_);
    ev.prio = priority(kind);
    ev.order = order_++;
    ev.kind = kind;
    ev.net = net;
    ev.a = a;
    ev.b = b;
    ev.sync = sync;
    ev.bytes = std::move(bytes);
    queue_.push_back(std::move(ev));
    std::push_heap(queue_.begin(), queue_.end(), Later{});
  }

  void trace(EventKind kind, std::uint32_t net, std::int32_t channel = -1, std::int64_t seq = -1,
             Outcome outcome = Outcome::None, std::int64_t value = -1, std::optional<std::int64_t> at = {}) {
    trace_.push_back({at.value_or(now_), kind, static_cast<std::int32_t>(net), kConnectionId, channel, seq,
                      outcome, value});
  }

  // --- source -----------------------------------------------------------------
  void build_source() {
    const std::size_t total = blocks_ * block_frames_ * format_.channels;
    source_.assign(total, 0);
    if (opt_.input) {
      std::copy(opt_.input->samples.begin(), opt_.input->samples.end(), source_.begin());
      return;
    }
    const std::size_t real = source_frames_ * format_.channels;
    const int depth = static_cast<int>(format_.bit_depth);
    switch (cfg_.source) {
      case SourceKind::Sine: {
        const double amp = (std::ldexp(1.0, depth - 1) - 1) * std::pow(10.0, cfg_.sine_dbfs / 20.0);
        for (std::size_t f = 0; f < source_frames_; ++f) {
          const double v = amp * std::sin(2 * std::numbers::pi * cfg_.sine_hz * static_cast<double>(f) /
                                          format_.sampling_rate_hz);
          const auto s = static_cast<std::int32_t>(std::lround(v));
          for (std::uint32_t c = 0; c < format_.channels; ++c) source_[f * format_.channels + c] = s;
        }
        break;
      }
      case SourceKind::Random: {
        std::uint64_t state = splitmix64(seed_ ^ 0xA0D10ull);
        for (std::size_t i = 0; i < real; ++i) {
          state = splitmix64(state);
          source_[i] = static_cast<std::int32_t>(static_cast<std::int64_t>(state) >> (64 - depth));
        }
        break;
      }
      default: break;
    }
  }

  void top_up(NetState& ns) {
    if (now_ >= saturated_until_) return;
    while (ns.conn.tx_queue.size() < 2) {
      TxItem item;
      item.payload.assign(cfg_.slot_capacity_bytes, 0);
      item.payload[0] = static_cast<std::uint8_t>(ns.data_seq);
      item.sequence = ns.data_seq++;
      item.backlogged = true;
      ns.conn.tx_queue.push_back(std::move(item));
    }
  }

  void on_block(const Event& ev) {
    auto& ns = nets_[ev.net];
    const auto b = static_cast<std::size_t>(ev.a);
    trace(EventKind::Capture, ev.net, -1, ev.a, Outcome::None, -1,
          from_sender(static_cast<double>(b) * cfg_.block_us));
    AudioBlock block;
    block.format = format_;
    const std::size_t per = std::size_t{block_frames_} * format_.channels;
    block.samples.assign(source_.begin() + b * per, source_.begin() + (b + 1) * per);
    for (auto& p : pack_audio(block, cfg_.slot_capacity_bytes - 4)) {
      TxItem item;
      const auto index = static_cast<std::uint32_t>(b * block_frames_ + p.frame_offset);
      item.payload.reserve(4 + p.bytes.size());
      for (int i = 0; i < 4; ++i) item.payload.push_back(static_cast<std::uint8_t>(index >> (8 * i)));
      item.payload.insert(item.payload.end(), p.bytes.begin(), p.bytes.end());
      item.sequence = ns.data_seq++;
      ns.conn.tx_queue.push_back(std::move(item));
    }
  }

  // --- MAC ----------------------------------------------------------------------
  std::int64_t slot_serial(std::int64_t period, std::int64_t slot) const {
    return period * static_cast<std::int64_t>(nets_.front().schedule.slots.size()) + slot;
  }

  std::int64_t slot_end(std::uint32_t net, std::int64_t period, std::int64_t slot) const {
    const auto& s = nets_[net].schedule.slots[static_cast<std::size_t>(slot)];
    return from_sender(static_cast<double>(period) * cfg_.period_us + s.start_us + s.duration_us);
  }

  void on_slot(const Event& ev) {
    auto& ns = nets_[ev.net];
    const auto& slots = ns.schedule.slots;
    const auto& slot = slots[static_cast<std::size_t>(ev.b)];

    const auto local = static_cast<std::int64_t>(std::llround(sender_local(now_)));
    if (detect_sync_loss(ns.conn, local)) {
      if (!ns.sync_lost) {
        ns.sync_lost = true;
        ++sync_losses_;
        trace(EventKind::SyncLoss, ev.net);
      }
    }

    std::int64_t np = ev.a, ni = ev.b + 1;
    if (ni == static_cast<std::int64_t>(slots.size())) { ni = 0; ++np; }
    const std::int64_t next =
        from_sender(static_cast<double>(np) * cfg_.period_us + slots[static_cast<std::size_t>(ni)].start_us);
    if (next < end_us_) push(next, EvKind::SlotBegin, ev.net, np, ni);

    if (saturated_) top_up(ns);
    const bool owned = slot.owner == ns.conn.connection_id;
    if (owned) trace(EventKind::Slot, ev.net, static_cast<std::int32_t>(slot.channel), -1, Outcome::Owned,
                     slot.duration_us);
    if (ns.exchange_pending) return;

    const TxAction action = on_slot_begin(ns.conn, slot, local);
    if (owned) {
      for (std::size_t i = action.kind == TxActionKind::SendData ? 1 : 0; i < ns.conn.tx_queue.size(); ++i) {
        ns.conn.tx_queue[i].backlogged = true;
      }
    }
    if (action.kind == TxActionKind::SendData) attempt(ev.net, ev.a, ev.b, false, 0);
    if (action.kind == TxActionKind::SendSync) attempt(ev.net, ev.a, ev.b, true, 0);
  }

  void on_retry(const Event& ev) {
    auto& ns = nets_[ev.net];
    if (!ev.sync && ns.conn.tx_queue.empty()) return;
    attempt(ev.net, ev.a, ev.b / 1024, ev.sync, static_cast<int>(ev.b % 1024));
  }

  void fail_data(std::uint32_t net) {
    auto& ns = nets_[net];
    auto& item = ns.conn.tx_queue.front();
    item.backlogged = true;
    if (item.attempts >= cfg_.max_tx_attempts) {
      trace(EventKind::Drop, net, -1, item.sequence, Outcome::Drop);
      ++dropped_;
      ns.conn.tx_queue.pop_front();
    }
  }

  void attempt(std::uint32_t net, std::int64_t period, std::int64_t slot_index, bool sync, int prior_busy) {
    auto& ns = nets_[net];
    const auto& slot = ns.schedule.slots[static_cast<std::size_t>(slot_index)];
    const auto ch = static_cast<std::int32_t>(slot.channel);
    const std::size_t payload = sync ? 0 : ns.conn.tx_queue.front().payload.size();
    const auto air = static_cast<std::int64_t>(frame_airtime_us(kFrameOverhead + payload, rate_));
    const bool wants_ack = !sync && cfg_.auto_reply;
    const std::int64_t exchange = air + (wants_ack ? 2 * prop_ + ack_air_ : 0);
    const std::int64_t end = slot_end(net, period, slot_index);

    CcaOutcome cca{CcaResult::Drop, 0};
    if (now_ + exchange <= end) cca = cca_attempt(cca_, slot.channel, now_, air, prior_busy);
    if (cca.result == CcaResult::Busy && cca.retry_at_us + exchange > end) cca.result = CcaResult::Drop;
    const std::int64_t seq_for_trace = sync ? ns.sync_seq : ns.conn.tx_queue.front().sequence;
    trace(EventKind::Cca, net, ch, seq_for_trace,
          cca.result == CcaResult::Clear ? Outcome::Clear
          : cca.result == CcaResult::Busy ? Outcome::Busy
                                          : Outcome::Drop);
    if (cca.result == CcaResult::Busy) {
      push(cca.retry_at_us, EvKind::CcaRetry, net, period, slot_index * 1024 + prior_busy + 1, {}, sync);
      return;
    }
    if (cca.result == CcaResult::Drop) {
      if (!sync) {
        ++ns.conn.tx_queue.front().attempts;
        fail_data(net);
      }
      return;
    }
    cca_.occupy(slot.channel, now_ + exchange);

    if (slot.is_contention()) {
      const std::int64_t serial = slot_serial(period, slot_index);
      if (ns.contention_marked != serial) {
        ns.contention_marked = serial;
        trace(EventKind::Slot, net, ch, -1, Outcome::Contention, slot.duration_us,
              from_sender(static_cast<double>(period) * cfg_.period_us + slot.start_us));
      }
    }

    const auto local = static_cast<std::int64_t>(std::llround(sender_local(now_)));
    ns.conn.last_tx_time_us = local;
    ns.sync_lost = false;
    const auto ts = static_cast<std::uint32_t>(local);

    Frame frame;
    std::uint32_t draw_attempt = 0;
    if (sync) {
      frame = make_sync_frame(static_cast<std::uint8_t>(net), kConnectionId, ns.sync_seq++, ts);
      trace(EventKind::TxSync, net, ch, frame.header.sequence, Outcome::Ok, air);
      ++sync_sent_;
    } else {
      auto& item = ns.conn.tx_queue.front();
      frame = make_data_frame(static_cast<std::uint8_t>(net), kConnectionId, item.sequence, ts, item.payload);
      if (item.attempts > 0) {
        frame.header.flags |= frame_flags::kRetransmission;
        ++retransmissions_;
      }
      if (wants_ack) frame.header.flags |= frame_flags::kAckRequested;
      draw_attempt = static_cast<std::uint32_t>(item.attempts);
      ++item.attempts;
      trace(EventKind::TxData, net, ch, item.sequence, Outcome::Ok, air);
      ++data_sent_;
    }

    const bool lost = loss_draw(seed_, net, kConnectionId, static_cast<std::uint32_t>(frame.header.frame_type),
                                frame.header.sequence, draw_attempt) < cfg_.loss_prob;
    if (lost) {
      trace(EventKind::Lost, net, ch, frame.header.sequence, Outcome::Lost, -1, now_ + air);
      ++lost_;
    } else {
      push(now_ + air + prop_, EvKind::FrameArrive, net, ch, 0, encode_frame(frame));
    }

    if (!sync) {
      if (wants_ack) {
        ns.exchange_pending = true;
        ns.pending_seq = frame.header.sequence;
        push(now_ + exchange + 1, EvKind::AckTimeout, net, static_cast<std::int64_t>(draw_attempt) + 1,
             frame.header.sequence);
      } else {
        ns.conn.tx_queue.pop_front();
      }
    }
  }

  void on_timeout(const Event& ev) {
    auto& ns = nets_[ev.net];
    if (!ns.exchange_pending || ns.pending_seq != static_cast<std::uint16_t>(ev.b)) return;
    if (ns.conn.tx_queue.empty() || ns.conn.tx_queue.front().attempts != ev.a) return;
    ns.exchange_pending = false;
    trace(EventKind::AckTimeout, ev.net, -1, ev.b, Outcome::Timeout);
    fail_data(ev.net);
  }

  void on_arrive(const Event& ev) {
    auto& ns = nets_[ev.net];
    const Frame frame = decode_frame(ev.bytes);
    const auto ch = static_cast<std::int32_t>(ev.a);
    const auto& h = frame.header;
    const auto air = static_cast<double>(frame_airtime_us(frame, rate_));

    if (h.frame_type == FrameType::Ack) {
      trace(EventKind::RxAck, ev.net, ch, h.sequence, Outcome::Ok);
      if (ns.exchange_pending && ns.pending_seq == h.sequence && !ns.conn.tx_queue.empty() &&
          ns.conn.tx_queue.front().sequence == h.sequence) {
        ns.exchange_pending = false;
        ns.conn.tx_queue.pop_front();
      }
      return;
    }

    ns.have_ref = true;
    ns.ref_sender_us = static_cast<double>(h.timestamp_ticks) + air + static_cast<double>(prop_);
    ns.ref_local_us = receiver_local(now_);

    if (h.frame_type == FrameType::Sync) {
      trace(EventKind::RxSync, ev.net, ch, h.sequence, Outcome::Ok);
      return;
    }

    if (h.flags & frame_flags::kAckRequested) {
      const Frame ack = make_ack_frame(h.network_id, h.connection_id, h.sequence,
                                       static_cast<std::uint32_t>(std::llround(receiver_local(now_))));
      trace(EventKind::TxAck, ev.net, ch, h.sequence, Outcome::Ok, ack_air_);
      ++acks_sent_;
      const std::uint32_t attempt = (h.flags & frame_flags::kRetransmission) ? retry_attempt(ns, h.sequence) : 0;
      if (loss_draw(seed_, ev.net, kConnectionId, static_cast<std::uint32_t>(FrameType::Ack), h.sequence,
                    attempt) < cfg_.loss_prob) {
        trace(EventKind::Lost, ev.net, ch, h.sequence, Outcome::Lost, -1, now_ + ack_air_);
        ++lost_;
      } else {
        push(now_ + ack_air_ + prop_, EvKind::FrameArrive, ev.net, ch, 0, encode_frame(ack));
      }
    }

    if (ns.last_data_seq && !sequence_newer(h.sequence, *ns.last_data_seq)) {
      trace(EventKind::RxDup, ev.net, ch, h.sequence, Outcome::Dup);
      return;
    }
    ns.last_data_seq = h.sequence;
    if (saturated_) {
      trace(EventKind::RxData, ev.net, ch, h.sequence, Outcome::Stored);
      return;
    }
    if (frame.payload.size() < 4) throw ProtocolError("audio payload without frame index");
    std::int64_t index = 0;
    for (int i = 0; i < 4; ++i) index |= std::int64_t{frame.payload[static_cast<std::size_t>(i)]} << (8 * i);
    const auto samples = pcm_decode(std::span(frame.payload).subspan(4), format_);
    const auto wr = ns.engine->buffer().write(index, samples);
    trace(EventKind::RxData, ev.net, ch, h.sequence,
          wr == JitterBuffer::WriteResult::Stored  ? Outcome::Stored
          : wr == JitterBuffer::WriteResult::Late ? Outcome::Late
                                                   : Outcome::Overflow);

    if (!ns.playout_scheduled) {
      ns.playout_scheduled = true;
      const double lead_now = ns.ref_sender_us;  // capture head at arrival, sender us
      double first = ns.ref_local_us + (target_us_ - lead_now);
      double cursor = 0;
      if (first < ns.ref_local_us) {
        first = ns.ref_local_us;
        cursor = (lead_now - target_us_) * format_.sampling_rate_hz / 1e6;
      }
      ns.first_tick_local = first;
      ns.engine->start(cursor);
      for (std::int64_t b = 0; b < ns.engine->missed_at_start(); ++b) {
        trace(EventKind::Playout, ev.net, -1, b, Outcome::Concealed);
      }
      push(from_receiver(first), EvKind::PlayoutTick, ev.net, 0, 0);
    }
  }

  // Attempt number of a retransmission as seen by the receiver: the sender's
  // current attempt count for the frame at the head of its queue.
  std::uint32_t retry_attempt(const NetState& ns, std::uint16_t seq) const {
    if (!ns.conn.tx_queue.empty() && ns.conn.tx_queue.front().sequence == seq) {
      return static_cast<std::uint32_t>(ns.conn.tx_queue.front().attempts - 1);
    }
    return 0;
  }

  // --- playout ------------------------------------------------------------------
  void on_tick(const Event& ev) {
    auto& ns = nets_[ev.net];
    auto& engine = *ns.engine;
    const double tick_local = ns.first_tick_local + static_cast<double>(ev.a) * cfg_.tick_us;
    const double head_us = ns.ref_sender_us + (tick_local - ns.ref_local_us);
    const double lead = head_us * format_.sampling_rate_hz / 1e6 - engine.cursor();
    TickResult r = engine.tick(lead);
    if (ev.net == 0 && opt_.keep_audio) ns.output.insert(ns.output.end(), r.samples.begin(), r.samples.end());
    for (const auto& bp : r.blocks) {
      const double local = ns.first_tick_local + static_cast<double>(bp.tick) * cfg_.tick_us +
                           bp.start_offset_frames * 1e6 / format_.sampling_rate_hz;
      trace(EventKind::Playout, ev.net, -1, bp.block_index, bp.concealed ? Outcome::Concealed : Outcome::Played,
            -1, from_receiver(local));
    }
    if (r.underflow) trace(EventKind::Underflow, ev.net);
    if (engine.first_pending_block() >= static_cast<std::int64_t>(blocks_)) {
      ns.playout_done = true;
      return;
    }
    const std::int64_t next = from_receiver(tick_local + cfg_.tick_us);
    if (next < end_us_) push(next, EvKind::PlayoutTick, ev.net, ev.a + 1, 0);
  }

  RunResult finish() {
    RunResult out;
    std::stable_sort(trace_.begin(), trace_.end(),
                     [](const TraceEvent& x, const TraceEvent& y) { return x.time_us < y.time_us; });
    RunMetrics& m = out.metrics;
    m.latency = measure_latency(trace_);
    m.link_utilization = measure_utilization(trace_);
    m.sync_loss_events = sync_losses_;
    m.blocks_captured = blocks_ * nets_.size();
    m.blocks_played = m.latency.delivered;
    m.blocks_concealed = m.latency.concealed;
    m.blocks_in_flight = m.latency.in_flight;
    const auto resolved = m.blocks_played + m.blocks_concealed;
    m.success_rate = resolved ? static_cast<double>(m.blocks_played) / static_cast<double>(resolved) : 1.0;
    m.data_frames_sent = data_sent_;
    m.retransmissions = retransmissions_;
    m.frames_lost = lost_;
    m.frames_dropped = dropped_;
    m.sync_frames_sent = sync_sent_;
    m.acks_sent = acks_sent_;
    m.simulated_us = now_;
    bool any_lead = false;
    for (std::uint32_t n = 0; n < nets_.size(); ++n) {
      const auto& ns = nets_[n];
      const auto& e = *ns.engine;
      m.concealment_events += e.concealment_events();
      m.underflow_events += e.underflow_events();
      m.overflow_events += e.buffer().overflow_events();
      m.late_frames += e.buffer().late_frames();
      if (e.ticks() > 0 && target_frames_ > 0) {
        const double lo = e.min_lead() / target_frames_, hi = e.max_lead() / target_frames_;
        m.min_lead_fraction = any_lead ? std::min(m.min_lead_fraction, lo) : lo;
        m.max_lead_fraction = any_lead ? std::max(m.max_lead_fraction, hi) : hi;
        if (n == 0) m.final_ratio = e.ratio();
        any_lead = true;
      }
      NetworkMetrics nm;
      nm.network = n;
      const auto lat = measure_latency(trace_, static_cast<std::int32_t>(n));
      const auto res = lat.delivered + lat.concealed;
      nm.success_rate = res ? static_cast<double>(lat.delivered) / static_cast<double>(res) : 1.0;
      nm.link_utilization = measure_utilization(trace_, static_cast<std::int32_t>(n));
      nm.mean_latency_us = lat.mean_us;
      nm.sync_loss_events =
          static_cast<std::uint64_t>(std::count_if(trace_.begin(), trace_.end(), [n](const TraceEvent& t) {
            return t.kind == EventKind::SyncLoss && t.network == static_cast<std::int32_t>(n);
          }));
      m.networks.push_back(nm);
      out.schedules.push_back(ns.schedule);
    }

    out.format = format_;
    out.source_frames = source_frames_;
    if (opt_.keep_audio) {
      out.input_samples = source_;
      out.output_samples = std::move(nets_.front().output);
      out.output_samples.resize(source_frames_ * format_.channels, 0);
    }
    if (opt_.keep_trace) out.trace = std::move(trace_);
    return out;
  }

  const ScenarioConfig& cfg_;
  std::uint64_t seed_;
  RunOptions opt_;
  CcaState cca_;
  double ds_ = 0, dr_ = 0, offset_ = 0;
  std::uint64_t rate_ = 0;
  AudioFormat format_;
  std::uint32_t block_frames_ = 0, tick_frames_ = 0;
  std::int64_t ack_air_ = 0, prop_ = 0;
  double target_us_ = 0, target_frames_ = 0;
  std::size_t source_frames_ = 0, blocks_ = 0;
  bool saturated_ = false;
  std::int64_t saturated_until_ = 0, end_us_ = 0;
  std::vector<std::int32_t> source_;
  std::vector<NetState> nets_;
  std::vector<Event> queue_;
  std::uint64_t order_ = 0;
  std::int64_t now_ = 0;
  std::vector<TraceEvent> trace_;
  std::uint64_t sync_losses_ = 0, data_sent_ = 0, retransmissions_ = 0, lost_ = 0, dropped_ = 0,
                sync_sent_ = 0, acks_sent_ = 0;
};

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, std::uint64_t seed, const RunOptions& options) {
  config.validate();
  Simulation sim(config, seed, options);
  return sim.run();
}

}  // namespace uwb
