#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uwbaudio/audio_core.hpp"
#include "uwbaudio/audio_format.hpp"

namespace uwb {

enum class SourceKind { Sine, Random, Silence, Idle, Saturated };

/// Flat key = value scenario description. Every key has a default, so an
/// empty file is a valid lossless 48 kHz / 16-bit stereo scenario.
struct ScenarioConfig {
  // radio
  std::string phy_profile = "1.2GHz";
  std::map<std::string, std::uint64_t> profiles = {{"1.2GHz", 18'000'000}, {"1.6GHz", 19'000'000}};
  double loss_prob = 0.0;
  std::uint32_t channels = 2;
  std::uint32_t networks = 1;
  std::int64_t propagation_delay_us = 0;

  // clocks
  double drift_ppm = 0.0;           // sender
  double receiver_drift_ppm = 0.0;
  std::int64_t clock_offset_us = 0; // receiver clock offset

  // MAC
  std::uint32_t period_us = 2000;
  std::uint32_t slot_us = 250;
  std::uint32_t slot_capacity_bytes = 400;
  std::int64_t retry_delay_us = 64;
  int max_retries = 3;
  int max_tx_attempts = 4;
  bool auto_sync = true;
  bool auto_reply = true;

  // audio
  AudioFormat audio;
  double preset_latency_ms = 10.0;
  std::uint32_t block_us = 2000;
  std::uint32_t tick_us = 1000;
  std::int64_t guard_us = 300;
  SourceKind source = SourceKind::Sine;
  double sine_hz = 1000.0;
  double sine_dbfs = -6.0;
  bool drift_compensation = true;
  ConcealPolicy conceal = ConcealPolicy::Silence;

  double duration_s = 10.0;

  // sweep
  std::vector<double> sweep_presets_ms = {5, 10, 20};
  std::vector<std::string> sweep_profiles = {"1.2GHz", "1.6GHz"};

  /// Applies one key; throws ConfigError naming the key on bad input.
  void set(std::string_view key, std::string_view value);
  /// Cross-field checks (profile exists, ranges, block/tick alignment).
  void validate() const;

  std::uint64_t phy_rate_bps() const;
  std::int64_t preset_latency_us() const;
  std::uint32_t block_frames() const;
};

ScenarioConfig parse_scenario(std::string_view text, std::string_view source_name = "<config>");
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// (key, description) for every recognized key, for help output.
std::vector<std::pair<std::string, std::string>> scenario_key_help();

std::vector<double> parse_number_list(std::string_view text, std::string_view key);
std::vector<std::string> parse_word_list(std::string_view text);

}  // namespace uwb
