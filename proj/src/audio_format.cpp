#include "uwbaudio/audio_format.hpp"

#include <algorithm>
#include <array>

#include "uwbaudio/error.hpp"

namespace uwb {
namespace {

constexpr std::array<std::uint32_t, 8> kStandardRates = {8000,  16000, 32000,  44100,
                                                         48000, 96000, 192000, 384000};

constexpr std::array<TierInfo, 4> kTiers = {{
    {QualityTier::CD_Resolution, "CD resolution", 44100, 16, BitRate{1411200}},
    {QualityTier::HD_Audio, "HD Audio", 48000, 24, BitRate{2304000}},
    {QualityTier::Hi_Resolution, "Hi Resolution", 96000, 24, BitRate{4608000}},
    {QualityTier::Ultra_HD, "Ultra HD", 192000, 24, BitRate{9216000}},
}};

constexpr std::array<QualityRow, 7> kQualityTable = {{
    {"CD resolution", {44100, 16, 2}, "1.411"},
    {"HD Audio", {48000, 24, 2}, "2.304"},
    {"Hi Resolution", {96000, 24, 2}, "4.608"},
    {"Hi-Res Audio", {48000, 24, 2}, "2.304"},
    {"Tidal MQA", {96000, 24, 2}, "4.608"},
    {"Apple Music Hi-Res", {192000, 24, 2}, "9.216"},
    {"Amazon Music Ultra HD", {192000, 24, 2}, "9.216"},
}};

}  // namespace

void validate(const AudioFormat& format) {
  if (format.sampling_rate_hz == 0) {
    throw ValidationError("sampling_rate_hz", "must be positive");
  }
  if (format.bit_depth != 16 && format.bit_depth != 24) {
    throw ValidationError("bit_depth", "must be 16 or 24, got " + std::to_string(format.bit_depth));
  }
  if (format.channels == 0) {
    throw ValidationError("channels", "must be at least 1");
  }
}

std::string BitRate::kbps_string() const {
  std::uint64_t whole = bps_ / 1000;
  std::uint64_t frac = bps_ % 1000;
  std::string out = std::to_string(whole);
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    digits.insert(0, 3 - digits.size(), '0');
    while (digits.back() == '0') digits.pop_back();
    out += '.' + digits;
  }
  return out;
}

BitRate compute_bitrate(const AudioFormat& format) {
  validate(format);
  return BitRate{std::uint64_t{format.sampling_rate_hz} * format.bit_depth * format.channels};
}

std::span<const TierInfo> quality_tiers() { return kTiers; }

const TierInfo* tier_info(QualityTier tier) {
  auto it = std::find_if(kTiers.begin(), kTiers.end(),
                         [tier](const TierInfo& t) { return t.tier == tier; });
  return it == kTiers.end() ? nullptr : &*it;
}

std::string_view to_string(QualityTier tier) {
  if (tier == QualityTier::SubCD) return "sub-CD";
  return tier_info(tier)->display_name;
}

QualityTier classify_tier(const AudioFormat& format) {
  validate(format);
  if (std::find(kStandardRates.begin(), kStandardRates.end(), format.sampling_rate_hz) ==
      kStandardRates.end()) {
    throw ValidationError("sampling_rate_hz",
                          "not a standard rate: " + std::to_string(format.sampling_rate_hz));
  }
  if (format.channels < 2) return QualityTier::SubCD;
  QualityTier best = QualityTier::SubCD;
  for (const auto& t : kTiers) {
    if (format.sampling_rate_hz >= t.min_sampling_rate_hz && format.bit_depth >= t.min_bit_depth) {
      best = t.tier;
    }
  }
  return best;
}

bool hires_wireless_eligible(const AudioFormat& format) {
  validate(format);
  return format.bit_depth >= 24 && format.sampling_rate_hz >= 96000;
}

std::span<const QualityRow> quality_table() { return kQualityTable; }

}  // namespace uwb
