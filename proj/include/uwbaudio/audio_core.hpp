#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "uwbaudio/audio_format.hpp"

namespace uwb {

/// Interleaved samples, one int32 per sample regardless of bit depth.
struct AudioBlock {
  AudioFormat format;
  std::vector<std::int32_t> samples;
  std::int64_t capture_time_us = 0;

  std::size_t frame_count() const { return format.channels ? samples.size() / format.channels : 0; }
  double duration_s() const {
    return static_cast<double>(frame_count()) / format.sampling_rate_hz;
  }
  friend bool operator==(const AudioBlock&, const AudioBlock&) = default;
};

// --- packing ----------------------------------------------------------------

struct AudioPayload {
  std::uint32_t frame_offset = 0;  // relative to the block's first frame
  std::uint32_t frame_count = 0;
  std::vector<std::uint8_t> bytes;  // little-endian PCM

  friend bool operator==(const AudioPayload&, const AudioPayload&) = default;
};

/// Splits a block into payloads of at most `max_payload_bytes`, cut on whole
/// sample frames. Throws ConfigError if one frame does not fit.
std::vector<AudioPayload> pack_audio(const AudioBlock& block, std::size_t max_payload_bytes);

struct GapMarker {
  std::uint32_t start_frame = 0;
  std::uint32_t frame_count = 0;
  friend bool operator==(const GapMarker&, const GapMarker&) = default;
};

struct UnpackedAudio {
  AudioBlock block;  // gaps are zero-filled
  std::vector<GapMarker> gaps;
};

/// Reassembles payloads sorted by offset. Holes between payloads (and, when
/// `expected_frames` is given, after the last one) become gap markers.
/// Throws ProtocolError on overlapping or unsorted offsets.
UnpackedAudio unpack_audio(std::span<const AudioPayload> payloads, const AudioFormat& format,
                           std::optional<std::uint32_t> expected_frames = std::nullopt);

// --- PCM --------------------------------------------------------------------

std::vector<std::uint8_t> pcm_passthrough(const AudioBlock& block);
std::vector<std::int32_t> pcm_decode(std::span<const std::uint8_t> bytes, const AudioFormat& format);
void pcm_append(std::span<const std::int32_t> samples, std::uint32_t bit_depth,
                std::vector<std::uint8_t>& out);

// --- ADPCM (IMA) ------------------------------------------------------------
//
// Block layout: u16 frame_count, then per channel {i16 first sample, u8 step
// index, u8 zero}, then 4-bit codes for frames 1..n-1, channel-interleaved,
// low nibble first. Each block carries the state it needs to decode alone.

class AdpcmEncoder {
 public:
  explicit AdpcmEncoder(std::uint32_t channels);
  std::vector<std::uint8_t> encode(const AudioBlock& block);

 private:
  std::vector<int> step_index_;
};

std::vector<std::uint8_t> adpcm_encode(const AudioBlock& block);
AudioBlock adpcm_decode(std::span<const std::uint8_t> bytes, const AudioFormat& format);

// --- concealment ------------------------------------------------------------

enum class ConcealPolicy { Silence, RepeatLast };

/// Fill for a gap of `gap_frames` frames. RepeatLast repeats the last whole
/// frame of `history`, falling back to silence when history is empty.
std::vector<std::int32_t> conceal(std::uint32_t gap_frames, std::span<const std::int32_t> history,
                                  std::uint32_t channels, ConcealPolicy policy);

// --- jitter buffer ------------------------------------------------------------

/// Ring of sample frames indexed by absolute stream frame number. Frames
/// before the release point are late, frames beyond capacity overflow; both
/// are counted.
class JitterBuffer {
 public:
  enum class WriteResult { Stored, Late, Overflow };

  JitterBuffer(std::uint32_t channels, std::size_t capacity_frames);

  /// Writes consecutive frames starting at `first_frame`; returns the worst
  /// outcome across them.
  WriteResult write(std::int64_t first_frame, std::span<const std::int32_t> samples);
  bool has(std::int64_t frame) const;
  std::span<const std::int32_t> frame(std::int64_t frame) const;
  void release_before(std::int64_t frame);

  std::int64_t release_point() const { return base_; }
  std::int64_t newest_frame() const { return newest_; }
  std::size_t occupancy_frames() const { return stored_; }
  std::size_t capacity_frames() const { return capacity_; }
  std::uint64_t overflow_events() const { return overflow_events_; }
  std::uint64_t late_frames() const { return late_frames_; }

 private:
  std::uint32_t channels_;
  std::size_t capacity_;
  std::vector<std::int32_t> data_;
  std::vector<std::int64_t> tags_;
  std::int64_t base_ = 0;
  std::int64_t newest_ = -1;
  std::size_t stored_ = 0;
  std::uint64_t overflow_events_ = 0;
  std::uint64_t late_frames_ = 0;
};

// --- drift compensation -------------------------------------------------------

inline constexpr double kDriftGain = 0.1;
inline constexpr double kMaxAdjustmentPpm = 500.0;
inline constexpr std::int64_t kMinDriftWindowUs = 100'000;

struct DriftCompensator {
  double target_occupancy_samples = 0;
  double adjustment_ratio = 1.0;
  double measured_drift_ppm = 0;
  double gain = kDriftGain;
  double deadband_samples = 0.5;
};

/// Proportional control on the window mean:
///   ratio = 1 + gain * (mean - target) / target, clamped to +/-500 ppm,
/// held at exactly 1 while |mean - target| is inside the deadband. A ratio
/// above 1 drains the buffer faster. Throws ValidationError if the window is
/// shorter than 100 ms.
double compensate_drift(DriftCompensator& comp, std::span<const double> occupancy_history,
                        std::int64_t window_us);

/// Linear-interpolation resampler over an interleaved source. Output frame j
/// reads source position start + j * step; integer positions copy exactly.
void resample_linear(std::span<const std::int32_t> source, std::uint32_t channels,
                     std::uint32_t bit_depth, double start, double step, std::size_t out_frames,
                     std::vector<std::int32_t>& out);

// --- playout ------------------------------------------------------------------

struct PlayoutConfig {
  AudioFormat format;
  std::uint32_t block_frames = 96;      // sender block size, for per-block accounting
  std::uint32_t tick_frames = 48;       // output frames per playout tick
  std::int64_t tick_us = 1000;
  double target_occupancy_frames = 0;   // playout lead the controller holds
  std::size_t capacity_frames = 0;      // jitter buffer size
  ConcealPolicy policy = ConcealPolicy::Silence;
  bool drift_compensation = true;
  std::size_t window_ticks = 100;
};

struct BlockPlayout {
  std::int64_t block_index = 0;
  double start_offset_frames = 0;  // output frames after the tick start
  std::int64_t tick = 0;
  bool concealed = false;
};

struct TickResult {
  std::vector<std::int32_t> samples;
  std::vector<BlockPlayout> blocks;  // blocks whose last frame was read this tick
  bool underflow = false;
  std::uint32_t concealed_frames = 0;
};

/// Receiver side of the pipeline: jitter buffer, drift-compensated playout
/// cursor, concealment and per-block deadline accounting.
class PlayoutEngine {
 public:
  explicit PlayoutEngine(const PlayoutConfig& config);

  JitterBuffer& buffer() { return buffer_; }
  const JitterBuffer& buffer() const { return buffer_; }
  const DriftCompensator& compensator() const { return comp_; }
  const PlayoutConfig& config() const { return config_; }

  bool started() const { return started_; }
  /// Places the cursor; blocks starting before it are reported as missed.
  void start(double cursor_frames);
  double cursor() const { return cursor_; }
  /// Frames at or past `frames` play as silence and belong to no block.
  void set_stream_end(std::int64_t frames) { stream_end_ = frames; }
  double ratio() const { return comp_.adjustment_ratio; }

  /// `lead_frames` is the distance from the cursor to the sender's estimated
  /// capture head, sampled at the start of the tick.
  TickResult tick(double lead_frames);

  std::uint64_t underflow_events() const { return underflow_events_; }
  std::uint64_t concealment_events() const { return concealment_events_; }
  double min_lead() const { return min_lead_; }
  double max_lead() const { return max_lead_; }
  std::int64_t ticks() const { return tick_count_; }
  std::int64_t first_pending_block() const { return next_block_; }
  /// Blocks that began before the starting cursor and so were never played.
  std::int64_t missed_at_start() const { return missed_at_start_; }

 private:
  PlayoutConfig config_;
  JitterBuffer buffer_;
  DriftCompensator comp_;
  std::deque<double> history_;
  double cursor_ = 0;
  bool started_ = false;
  std::int64_t tick_count_ = 0;
  std::int64_t next_block_ = 0;       // first block not yet finalized
  double next_block_start_ = 0;       // its start offset, once reached
  bool next_block_started_ = false;
  bool next_block_concealed_ = false;
  std::int64_t next_block_tick_ = 0;
  bool in_gap_ = false;
  std::vector<std::int32_t> last_good_;
  std::uint64_t underflow_events_ = 0;
  std::uint64_t concealment_events_ = 0;
  double min_lead_ = 0;
  double max_lead_ = 0;
  std::vector<std::int32_t> scratch_;
  std::int64_t missed_at_start_ = 0;
  std::int64_t stream_end_ = std::numeric_limits<std::int64_t>::max();
};

}  // namespace uwb
