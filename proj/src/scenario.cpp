#include "uwbaudio/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "uwbaudio/error.hpp"

namespace uwb {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("key '" + std::string(key) + "': expected " + std::string(expected) + ", got '" +
                    std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad(key, v, "a number");
  return out;
}

std::int64_t to_int(std::string_view key, std::string_view v) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "an integer");
  return out;
}

std::uint32_t to_u32(std::string_view key, std::string_view v, std::uint32_t min = 0) {
  const std::int64_t x = to_int(key, v);
  if (x < min || x > 0xFFFFFFFFll) bad(key, v, "an integer >= " + std::to_string(min));
  return static_cast<std::uint32_t>(x);
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  bad(key, v, "a boolean (true/false/on/off)");
}

}  // namespace

std::vector<double> parse_number_list(std::string_view text, std::string_view key) {
  std::vector<double> out;
  for (const auto& w : parse_word_list(text)) out.push_back(to_double(key, w));
  return out;
}

std::vector<std::string> parse_word_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      auto w = trim(text.substr(start, i - start));
      if (!w.empty()) out.emplace_back(w);
      start = i + 1;
    }
  }
  return out;
}

void ScenarioConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "phy_profile") {
    phy_profile = std::string(value);
  } else if (key.starts_with("profile.") && key.ends_with(".phy_rate_bps")) {
    auto name = key.substr(8, key.size() - 8 - 13);
    if (name.empty()) bad(key, value, "profile.<name>.phy_rate_bps");
    const std::int64_t rate = to_int(key, value);
    if (rate <= 0) bad(key, value, "a positive rate");
    profiles[std::string(name)] = static_cast<std::uint64_t>(rate);
  } else if (key == "loss_prob") {
    loss_prob = to_double(key, value);
    if (loss_prob < 0 || loss_prob > 1) bad(key, value, "a probability in [0, 1]");
  } else if (key == "channels") {
    channels = to_u32(key, value, 1);
  } else if (key == "networks") {
    networks = to_u32(key, value, 1);
    if (networks > 255) bad(key, value, "at most 255 networks");
  } else if (key == "propagation_delay_us") {
    propagation_delay_us = to_int(key, value);
    if (propagation_delay_us < 0) bad(key, value, "a nonnegative delay");
  } else if (key == "drift_ppm" || key == "receiver_drift_ppm") {
    const double d = to_double(key, value);
    if (std::abs(d) > 500) bad(key, value, "|drift| <= 500 ppm");
    (key == "drift_ppm" ? drift_ppm : receiver_drift_ppm) = d;
  } else if (key == "clock_offset_us") {
    clock_offset_us = to_int(key, value);
  } else if (key == "period_us") {
    period_us = to_u32(key, value, 1);
  } else if (key == "slot_us") {
    slot_us = to_u32(key, value, 1);
  } else if (key == "slot_capacity_bytes") {
    slot_capacity_bytes = to_u32(key, value, 1);
  } else if (key == "retry_delay_us") {
    retry_delay_us = to_u32(key, value, 1);
  } else if (key == "max_retries") {
    max_retries = static_cast<int>(to_u32(key, value));
  } else if (key == "max_tx_attempts") {
    max_tx_attempts = static_cast<int>(to_u32(key, value, 1));
  } else if (key == "auto_sync") {
    auto_sync = to_bool(key, value);
  } else if (key == "auto_reply") {
    auto_reply = to_bool(key, value);
  } else if (key == "audio.sampling_rate") {
    audio.sampling_rate_hz = to_u32(key, value, 1);
  } else if (key == "audio.bit_depth") {
    audio.bit_depth = to_u32(key, value);
    if (audio.bit_depth != 16 && audio.bit_depth != 24) bad(key, value, "16 or 24");
  } else if (key == "audio.channels") {
    audio.channels = to_u32(key, value, 1);
  } else if (key == "preset_latency_ms") {
    preset_latency_ms = to_double(key, value);
    if (preset_latency_ms <= 0) bad(key, value, "a positive latency");
  } else if (key == "audio.block_us") {
    block_us = to_u32(key, value, 1);
  } else if (key == "audio.tick_us") {
    tick_us = to_u32(key, value, 1);
  } else if (key == "audio.guard_us") {
    guard_us = to_int(key, value);
    if (guard_us < 0) bad(key, value, "a nonnegative guard");
  } else if (key == "audio.source") {
    if (value == "sine") source = SourceKind::Sine;
    else if (value == "random") source = SourceKind::Random;
    else if (value == "silence") source = SourceKind::Silence;
    else if (value == "idle") source = SourceKind::Idle;
    else if (value == "saturated") source = SourceKind::Saturated;
    else bad(key, value, "sine, random, silence, idle or saturated");
  } else if (key == "audio.sine_hz") {
    sine_hz = to_double(key, value);
  } else if (key == "audio.sine_dbfs") {
    sine_dbfs = to_double(key, value);
    if (sine_dbfs > 0) bad(key, value, "a level <= 0 dBFS");
  } else if (key == "audio.drift_compensation") {
    drift_compensation = to_bool(key, value);
  } else if (key == "audio.conceal") {
    if (value == "silence") conceal = ConcealPolicy::Silence;
    else if (value == "repeat") conceal = ConcealPolicy::RepeatLast;
    else bad(key, value, "silence or repeat");
  } else if (key == "duration_s") {
    duration_s = to_double(key, value);
    if (duration_s <= 0) bad(key, value, "a positive duration");
  } else if (key == "sweep.presets_ms") {
    sweep_presets_ms = parse_number_list(value, key);
  } else if (key == "sweep.profiles") {
    sweep_profiles = parse_word_list(value);
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

void ScenarioConfig::validate() const {
  if (!profiles.contains(phy_profile)) {
    throw ConfigError("key 'phy_profile': unknown profile '" + phy_profile + "'");
  }
  uwb::validate(audio);
  const std::uint64_t frames_x1e6 = std::uint64_t{audio.sampling_rate_hz} * block_us;
  if (frames_x1e6 % 1'000'000 != 0) {
    throw ConfigError("key 'audio.block_us': block must hold a whole number of sample frames");
  }
  if ((std::uint64_t{audio.sampling_rate_hz} * tick_us) % 1'000'000 != 0) {
    throw ConfigError("key 'audio.tick_us': tick must hold a whole number of sample frames");
  }
  if (static_cast<double>(guard_us) >= preset_latency_ms * 1000.0) {
    throw ConfigError("key 'audio.guard_us': guard must be shorter than the preset latency");
  }
  if (channels == 0) throw ConfigError("key 'channels': must be positive");
}

std::uint64_t ScenarioConfig::phy_rate_bps() const {
  auto it = profiles.find(phy_profile);
  if (it == profiles.end()) throw ConfigError("key 'phy_profile': unknown profile '" + phy_profile + "'");
  return it->second;
}

std::int64_t ScenarioConfig::preset_latency_us() const {
  return std::llround(preset_latency_ms * 1000.0);
}

std::uint32_t ScenarioConfig::block_frames() const {
  return static_cast<std::uint32_t>(std::uint64_t{audio.sampling_rate_hz} * block_us / 1'000'000);
}

ScenarioConfig parse_scenario(std::string_view text, std::string_view source_name) {
  ScenarioConfig config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) {
      throw ConfigError(where + "expected 'key = value', got '" + std::string(line) + "'");
    }
    try {
      config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
    if (end == text.size()) break;
  }
  return config;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string());
}

std::vector<std::pair<std::string, std::string>> scenario_key_help() {
  return {
      {"phy_profile", "bandwidth profile name (default 1.2GHz)"},
      {"profile.<name>.phy_rate_bps", "PHY payload rate of a profile (1.2GHz=18000000, 1.6GHz=19000000)"},
      {"loss_prob", "independent per-frame loss probability in [0,1] (default 0)"},
      {"channels", "hop channels shared by all networks (default 2)"},
      {"networks", "independent sender/receiver networks (default 1)"},
      {"propagation_delay_us", "constant propagation delay (default 0)"},
      {"drift_ppm", "sender clock drift, |ppm| <= 500 (default 0)"},
      {"receiver_drift_ppm", "receiver clock drift, |ppm| <= 500 (default 0)"},
      {"clock_offset_us", "receiver clock offset (default 0)"},
      {"period_us", "superframe period, <= 10000 (default 2000)"},
      {"slot_us", "timeslot duration (default 250)"},
      {"slot_capacity_bytes", "payload bytes one slot carries (default 400)"},
      {"retry_delay_us", "CCA retry delay (default 64)"},
      {"max_retries", "CCA retries before a frame is dropped (default 3)"},
      {"max_tx_attempts", "transmissions of one data frame before giving up (default 4)"},
      {"auto_sync", "send header-only sync frames when idle (default true)"},
      {"auto_reply", "acknowledge data frames and retransmit on loss (default true)"},
      {"audio.sampling_rate", "Hz (default 48000)"},
      {"audio.bit_depth", "16 or 24 (default 16)"},
      {"audio.channels", "channel count (default 2)"},
      {"audio.block_us", "capture block duration (default 2000)"},
      {"audio.tick_us", "playout tick duration (default 1000)"},
      {"audio.guard_us", "playout aims this far ahead of the preset deadline (default 300)"},
      {"audio.source", "sine | random | silence | idle | saturated (default sine)"},
      {"audio.sine_hz", "sine source frequency (default 1000)"},
      {"audio.sine_dbfs", "sine source level (default -6)"},
      {"audio.drift_compensation", "resample playout to track clock drift (default true)"},
      {"audio.conceal", "silence | repeat (default silence)"},
      {"preset_latency_ms", "capture-to-playout deadline (default 10)"},
      {"duration_s", "captured audio duration (default 10)"},
      {"sweep.presets_ms", "comma list of presets for sweep (default 5,10,20)"},
      {"sweep.profiles", "comma list of profiles for sweep (default 1.2GHz,1.6GHz)"},
  };
}

}  // namespace uwb
