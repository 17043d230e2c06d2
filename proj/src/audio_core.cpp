#include "uwbaudio/audio_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uwbaudio/error.hpp"

namespace uwb {
namespace {

std::int32_t clamp_to_depth(long long v, std::uint32_t bit_depth) {
  const long long hi = (1LL << (bit_depth - 1)) - 1;
  const long long lo = -(1LL << (bit_depth - 1));
  return static_cast<std::int32_t>(std::clamp(v, lo, hi));
}

}  // namespace

// --- packing ----------------------------------------------------------------

void pcm_append(std::span<const std::int32_t> samples, std::uint32_t bit_depth,
                std::vector<std::uint8_t>& out) {
  const std::uint32_t width = bit_depth / 8;
  out.reserve(out.size() + samples.size() * width);
  for (std::int32_t s : samples) {
    auto u = static_cast<std::uint32_t>(s);
    for (std::uint32_t b = 0; b < width; ++b) out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
}

std::vector<std::uint8_t> pcm_passthrough(const AudioBlock& block) {
  std::vector<std::uint8_t> out;
  pcm_append(block.samples, block.format.bit_depth, out);
  return out;
}

std::vector<std::int32_t> pcm_decode(std::span<const std::uint8_t> bytes, const AudioFormat& format) {
  validate(format);
  const std::uint32_t width = format.bytes_per_sample();
  if (bytes.size() % width != 0) {
    throw ProtocolError("pcm byte count " + std::to_string(bytes.size()) +
                        " is not a multiple of the sample width");
  }
  std::vector<std::int32_t> out(bytes.size() / width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (std::uint32_t b = 0; b < width; ++b) u |= std::uint32_t{bytes[i * width + b]} << (8 * b);
    const std::uint32_t shift = 32 - format.bit_depth;
    out[i] = static_cast<std::int32_t>(u << shift) >> shift;
  }
  return out;
}

std::vector<AudioPayload> pack_audio(const AudioBlock& block, std::size_t max_payload_bytes) {
  validate(block.format);
  const std::size_t frame_bytes = block.format.frame_bytes();
  if (max_payload_bytes < frame_bytes) {
    throw ConfigError("max payload of " + std::to_string(max_payload_bytes) +
                      " bytes cannot hold one " + std::to_string(frame_bytes) + "-byte sample frame");
  }
  if (block.samples.size() % block.format.channels != 0) {
    throw ValidationError("samples", "length not divisible by channel count");
  }
  const std::size_t per_payload = max_payload_bytes / frame_bytes;
  const std::size_t frames = block.frame_count();
  const std::span<const std::int32_t> all(block.samples);
  std::vector<AudioPayload> out;
  for (std::size_t first = 0; first < frames; first += per_payload) {
    const std::size_t n = std::min(per_payload, frames - first);
    AudioPayload p;
    p.frame_offset = static_cast<std::uint32_t>(first);
    p.frame_count = static_cast<std::uint32_t>(n);
    pcm_append(all.subspan(first * block.format.channels, n * block.format.channels),
               block.format.bit_depth, p.bytes);
    out.push_back(std::move(p));
  }
  return out;
}

UnpackedAudio unpack_audio(std::span<const AudioPayload> payloads, const AudioFormat& format,
                           std::optional<std::uint32_t> expected_frames) {
  validate(format);
  UnpackedAudio result;
  result.block.format = format;
  std::uint32_t cursor = 0;
  for (const auto& p : payloads) {
    if (p.frame_offset < cursor) {
      throw ProtocolError("payload at frame " + std::to_string(p.frame_offset) +
                          " overlaps data ending at frame " + std::to_string(cursor));
    }
    if (p.bytes.size() != std::size_t{p.frame_count} * format.frame_bytes()) {
      throw ProtocolError("payload length does not match its frame count");
    }
    if (p.frame_offset > cursor) {
      result.gaps.push_back({cursor, p.frame_offset - cursor});
      result.block.samples.resize(std::size_t{p.frame_offset} * format.channels, 0);
    }
    auto samples = pcm_decode(p.bytes, format);
    result.block.samples.insert(result.block.samples.end(), samples.begin(), samples.end());
    cursor = p.frame_offset + p.frame_count;
  }
  if (expected_frames && *expected_frames > cursor) {
    result.gaps.push_back({cursor, *expected_frames - cursor});
    result.block.samples.resize(std::size_t{*expected_frames} * format.channels, 0);
  }
  return result;
}

// --- concealment ------------------------------------------------------------

std::vector<std::int32_t> conceal(std::uint32_t gap_frames, std::span<const std::int32_t> history,
                                  std::uint32_t channels, ConcealPolicy policy) {
  if (gap_frames == 0) throw ValidationError("gap", "concealment gap must be nonempty");
  if (channels == 0) throw ValidationError("channels", "must be at least 1");
  std::vector<std::int32_t> out(std::size_t{gap_frames} * channels, 0);
  if (policy == ConcealPolicy::RepeatLast && history.size() >= channels) {
    auto last = history.last(channels);
    for (std::size_t f = 0; f < gap_frames; ++f) {
      std::copy(last.begin(), last.end(), out.begin() + static_cast<std::ptrdiff_t>(f * channels));
    }
  }
  return out;
}

// --- jitter buffer ------------------------------------------------------------

JitterBuffer::JitterBuffer(std::uint32_t channels, std::size_t capacity_frames)
    : channels_(channels),
      capacity_(capacity_frames),
      data_(capacity_frames * channels, 0),
      tags_(capacity_frames, -1) {
  if (channels == 0) throw ValidationError("channels", "must be at least 1");
  if (capacity_frames == 0) throw ValidationError("capacity_frames", "must be positive");
}

JitterBuffer::WriteResult JitterBuffer::write(std::int64_t first_frame,
                                              std::span<const std::int32_t> samples) {
  if (samples.size() % channels_ != 0) {
    throw ValidationError("samples", "length not divisible by channel count");
  }
  WriteResult worst = WriteResult::Stored;
  const auto frames = static_cast<std::int64_t>(samples.size() / channels_);
  bool overflowed = false;
  for (std::int64_t k = 0; k < frames; ++k) {
    const std::int64_t f = first_frame + k;
    if (f < base_) {
      ++late_frames_;
      if (worst == WriteResult::Stored) worst = WriteResult::Late;
      continue;
    }
    if (f >= base_ + static_cast<std::int64_t>(capacity_)) {
      overflowed = true;
      worst = WriteResult::Overflow;
      continue;
    }
    const std::size_t slot = static_cast<std::size_t>(f % static_cast<std::int64_t>(capacity_));
    if (tags_[slot] != f) {
      tags_[slot] = f;
      ++stored_;
    }
    std::copy_n(samples.begin() + k * channels_, channels_, data_.begin() + slot * channels_);
    newest_ = std::max(newest_, f);
  }
  if (overflowed) ++overflow_events_;
  return worst;
}

bool JitterBuffer::has(std::int64_t frame) const {
  if (frame < base_ || frame >= base_ + static_cast<std::int64_t>(capacity_)) return false;
  return tags_[static_cast<std::size_t>(frame % static_cast<std::int64_t>(capacity_))] == frame;
}

std::span<const std::int32_t> JitterBuffer::frame(std::int64_t frame) const {
  if (!has(frame)) throw LookupError("frame " + std::to_string(frame) + " not buffered");
  const auto slot = static_cast<std::size_t>(frame % static_cast<std::int64_t>(capacity_));
  return std::span<const std::int32_t>(data_).subspan(slot * channels_, channels_);
}

void JitterBuffer::release_before(std::int64_t frame) {
  if (frame <= base_) return;
  const std::int64_t end = std::min(frame, base_ + static_cast<std::int64_t>(capacity_));
  for (std::int64_t f = base_; f < end; ++f) {
    const auto slot = static_cast<std::size_t>(f % static_cast<std::int64_t>(capacity_));
    if (tags_[slot] == f) {
      tags_[slot] = -1;
      --stored_;
    }
  }
  base_ = frame;
}

// --- drift compensation -------------------------------------------------------

double compensate_drift(DriftCompensator& comp, std::span<const double> occupancy_history,
                        std::int64_t window_us) {
  if (window_us < kMinDriftWindowUs) {
    throw ValidationError("occupancy_history", "window shorter than 100 ms");
  }
  if (occupancy_history.empty() || comp.target_occupancy_samples <= 0) return comp.adjustment_ratio;
  const double mean = std::accumulate(occupancy_history.begin(), occupancy_history.end(), 0.0) /
                      static_cast<double>(occupancy_history.size());
  const double error = mean - comp.target_occupancy_samples;
  double ratio = 1.0;
  if (std::abs(error) > comp.deadband_samples) {
    const double limit = kMaxAdjustmentPpm * 1e-6;
    ratio = 1.0 + std::clamp(comp.gain * error / comp.target_occupancy_samples, -limit, limit);
  }
  comp.adjustment_ratio = ratio;
  comp.measured_drift_ppm = (ratio - 1.0) * 1e6;
  return ratio;
}

void resample_linear(std::span<const std::int32_t> source, std::uint32_t channels,
                     std::uint32_t bit_depth, double start, double step, std::size_t out_frames,
                     std::vector<std::int32_t>& out) {
  const std::size_t src_frames = source.size() / channels;
  for (std::size_t j = 0; j < out_frames; ++j) {
    const double pos = start + static_cast<double>(j) * step;
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - std::floor(pos);
    if (i >= src_frames || (frac > 0 && i + 1 >= src_frames)) {
      throw ValidationError("source", "resampler read past the end of its source");
    }
    for (std::uint32_t c = 0; c < channels; ++c) {
      const std::int32_t a = source[i * channels + c];
      if (frac == 0) {
        out.push_back(a);
      } else {
        const std::int32_t b = source[(i + 1) * channels + c];
        out.push_back(clamp_to_depth(std::llround(a + frac * (static_cast<double>(b) - a)), bit_depth));
      }
    }
  }
}

// --- playout ------------------------------------------------------------------

PlayoutEngine::PlayoutEngine(const PlayoutConfig& config)
    : config_(config), buffer_(config.format.channels, config.capacity_frames) {
  comp_.target_occupancy_samples = config.target_occupancy_frames;
  if (config.block_frames == 0) throw ValidationError("block_frames", "must be positive");
  if (config.tick_frames == 0) throw ValidationError("tick_frames", "must be positive");
}

void PlayoutEngine::start(double cursor_frames) {
  started_ = true;
  cursor_ = std::max(0.0, cursor_frames);
  const auto bf = static_cast<double>(config_.block_frames);
  next_block_ = static_cast<std::int64_t>(std::ceil(cursor_ / bf));
  missed_at_start_ = next_block_;
  buffer_.release_before(static_cast<std::int64_t>(std::floor(cursor_)));
  min_lead_ = max_lead_ = config_.target_occupancy_frames;
}

TickResult PlayoutEngine::tick(double lead_frames) {
  TickResult result;
  if (!started_) throw ProtocolError("playout tick before start");
  const std::uint32_t ch = config_.format.channels;
  const std::uint32_t n = config_.tick_frames;
  const auto bf = static_cast<std::int64_t>(config_.block_frames);

  if (tick_count_ == 0) {
    min_lead_ = max_lead_ = lead_frames;
  } else {
    min_lead_ = std::min(min_lead_, lead_frames);
    max_lead_ = std::max(max_lead_, lead_frames);
  }
  history_.push_back(lead_frames);
  while (history_.size() > config_.window_ticks) history_.pop_front();
  if (config_.drift_compensation && history_.size() >= config_.window_ticks) {
    std::vector<double> window(history_.begin(), history_.end());
    compensate_drift(comp_, window, static_cast<std::int64_t>(config_.window_ticks) * config_.tick_us);
  }
  const double ratio = comp_.adjustment_ratio;

  const auto first = static_cast<std::int64_t>(std::floor(cursor_));
  const double last_pos = cursor_ + (n - 1) * ratio;
  const auto last_whole = static_cast<std::int64_t>(std::floor(last_pos));
  const std::int64_t last_needed = last_whole + (last_pos > std::floor(last_pos) ? 1 : 0);

  scratch_.clear();
  std::vector<bool> missing_flags;
  missing_flags.reserve(static_cast<std::size_t>(last_needed - first + 1));
  std::int64_t f = first;
  while (f <= last_needed) {
    if (f >= stream_end_) {
      scratch_.insert(scratch_.end(), ch, 0);
      missing_flags.push_back(false);
      ++f;
      continue;
    }
    if (buffer_.has(f)) {
      auto fr = buffer_.frame(f);
      scratch_.insert(scratch_.end(), fr.begin(), fr.end());
      last_good_.assign(fr.begin(), fr.end());
      missing_flags.push_back(false);
      in_gap_ = false;
      ++f;
      continue;
    }
    std::int64_t run_end = f;
    while (run_end <= last_needed && run_end < stream_end_ && !buffer_.has(run_end)) ++run_end;
    const auto run = static_cast<std::uint32_t>(run_end - f);
    auto fill = conceal(run, last_good_, ch, config_.policy);
    scratch_.insert(scratch_.end(), fill.begin(), fill.end());
    missing_flags.insert(missing_flags.end(), run, true);
    if (run_end - 1 > buffer_.newest_frame()) result.underflow = true;
    if (!in_gap_) ++concealment_events_;
    in_gap_ = true;
    f = run_end;
  }

  auto finalize = [&]() {
    BlockPlayout bp;
    bp.block_index = next_block_;
    bp.start_offset_frames = next_block_start_;
    bp.tick = next_block_tick_;
    bp.concealed = next_block_concealed_;
    if (!next_block_started_) {
      bp.start_offset_frames = std::max(0.0, (next_block_ * bf - cursor_) / ratio);
      bp.tick = tick_count_;
      bp.concealed = true;
    }
    result.blocks.push_back(bp);
    ++next_block_;
    next_block_started_ = false;
    next_block_concealed_ = false;
  };

  for (std::uint32_t j = 0; j < n; ++j) {
    const double pos = cursor_ + j * ratio;
    const auto i = static_cast<std::int64_t>(std::floor(pos));
    const std::int64_t block = i / bf;
    if (i >= stream_end_) {
      const std::int64_t end_block = (stream_end_ + bf - 1) / bf;
      while (next_block_ < end_block) finalize();
      break;
    }
    while (next_block_ < block) finalize();
    if (block == next_block_ && !next_block_started_) {
      next_block_started_ = true;
      next_block_start_ = std::max(0.0, (next_block_ * bf - cursor_) / ratio);
      next_block_tick_ = tick_count_;
    }
    if (missing_flags[static_cast<std::size_t>(i - first)]) {
      next_block_concealed_ = true;
      ++result.concealed_frames;
    }
  }
  if (next_block_started_ && last_whole >= (next_block_ + 1) * bf - 1) finalize();

  result.samples.reserve(std::size_t{n} * ch);
  resample_linear(scratch_, ch, config_.format.bit_depth, cursor_ - static_cast<double>(first),
                  ratio, n, result.samples);

  cursor_ += n * ratio;
  buffer_.release_before(static_cast<std::int64_t>(std::floor(cursor_)));
  if (result.underflow) ++underflow_events_;
  ++tick_count_;
  return result;
}

}  // namespace uwb
