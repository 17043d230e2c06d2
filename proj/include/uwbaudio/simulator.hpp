#pragma once

#include <cstdint>
#include <vector>

#include "uwbaudio/audio_format.hpp"
#include "uwbaudio/scenario.hpp"
#include "uwbaudio/trace.hpp"
#include "uwbaudio/wav.hpp"
#include "uwbaudio/wireless_core.hpp"

namespace uwb {

struct NetworkMetrics {
  std::uint32_t network = 0;
  double success_rate = 1.0;
  double link_utilization = 0;
  double mean_latency_us = 0;
  std::uint64_t sync_loss_events = 0;
};

struct RunMetrics {
  LatencySummary latency;
  double link_utilization = 0;
  double success_rate = 1.0;  // blocks played intact / blocks that reached their deadline
  std::uint64_t sync_loss_events = 0;
  std::uint64_t concealment_events = 0;

  std::uint64_t blocks_captured = 0;
  std::uint64_t blocks_played = 0;
  std::uint64_t blocks_concealed = 0;
  std::uint64_t blocks_in_flight = 0;

  std::uint64_t data_frames_sent = 0;  // including retransmissions
  std::uint64_t retransmissions = 0;
  std::uint64_t frames_lost = 0;
  std::uint64_t frames_dropped = 0;
  std::uint64_t sync_frames_sent = 0;
  std::uint64_t acks_sent = 0;

  std::uint64_t underflow_events = 0;
  std::uint64_t overflow_events = 0;
  std::uint64_t late_frames = 0;
  // playout lead extremes as a fraction of the controller target
  double min_lead_fraction = 1.0;
  double max_lead_fraction = 1.0;
  double final_ratio = 1.0;

  std::int64_t simulated_us = 0;
  std::vector<NetworkMetrics> networks;
};

struct RunOptions {
  const WavData* input = nullptr;  // replaces the synthetic source and its format
  bool keep_trace = true;
  bool keep_audio = true;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<TraceEvent> trace;
  AudioFormat format;
  std::vector<std::int32_t> input_samples;   // network 0 source, padded to whole blocks
  std::vector<std::int32_t> output_samples;  // network 0 playout, trimmed to the source length
  std::size_t source_frames = 0;
  std::vector<Schedule> schedules;
};

/// Deterministic for (config, seed, input). Throws ConfigError or
/// AdmissionError before simulating if the scenario is invalid.
RunResult run_scenario(const ScenarioConfig& config, std::uint64_t seed, const RunOptions& options = {});

/// Required on-air bit rate for one audio stream: payload bytes per block
/// (including the frame-index prefix) over the block duration, rounded up.
std::uint64_t stream_bitrate_bps(const AudioFormat& format, std::uint32_t block_frames,
                                 std::uint32_t block_us, std::uint32_t slot_capacity_bytes);

std::uint64_t splitmix64(std::uint64_t x);
/// Uniform [0,1) draw for one transmission attempt.
double loss_draw(std::uint64_t seed, std::uint32_t network, std::uint32_t connection,
                 std::uint32_t frame_type, std::uint32_t sequence, std::uint32_t attempt);

}  // namespace uwb
