#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace uwb {

struct AudioFormat {
  std::uint32_t sampling_rate_hz = 48000;
  std::uint32_t bit_depth = 16;
  std::uint32_t channels = 2;

  std::uint32_t bytes_per_sample() const { return bit_depth / 8; }
  /// One interleaved sample per channel.
  std::uint32_t frame_bytes() const { return channels * bytes_per_sample(); }

  friend bool operator==(const AudioFormat&, const AudioFormat&) = default;
};

/// Throws ValidationError naming the offending field.
void validate(const AudioFormat& format);

/// Exact bit rate. Stored as integer bits per second so 1411.2 kbps is
/// represented without rounding.
class BitRate {
 public:
  constexpr BitRate() = default;
  constexpr explicit BitRate(std::uint64_t bits_per_second) : bps_(bits_per_second) {}

  constexpr std::uint64_t bits_per_second() const { return bps_; }
  double kbps() const { return static_cast<double>(bps_) / 1000.0; }
  /// Shortest exact decimal, e.g. "1411.2", "1536".
  std::string kbps_string() const;

  friend constexpr auto operator<=>(const BitRate&, const BitRate&) = default;

 private:
  std::uint64_t bps_ = 0;
};

BitRate compute_bitrate(const AudioFormat& format);

enum class QualityTier { SubCD, CD_Resolution, HD_Audio, Hi_Resolution, Ultra_HD };

struct TierInfo {
  QualityTier tier;
  std::string_view display_name;
  std::uint32_t min_sampling_rate_hz;
  std::uint32_t min_bit_depth;
  BitRate min_bitrate;  // stereo at the threshold parameters
};

/// Tiers in ascending order of min_bitrate (SubCD excluded).
std::span<const TierInfo> quality_tiers();
const TierInfo* tier_info(QualityTier tier);
std::string_view to_string(QualityTier tier);

/// Highest tier whose sampling rate and bit depth the format meets; stereo or
/// more is required for any tier. Rates outside the standard set are rejected.
QualityTier classify_tier(const AudioFormat& format);

/// Hi-Res Audio Wireless threshold: at least 24-bit / 96 kHz.
bool hires_wireless_eligible(const AudioFormat& format);

/// One row of the published quality table, with the bit rate as printed.
struct QualityRow {
  std::string_view name;
  AudioFormat format;
  std::string_view listed_mbps;
};
std::span<const QualityRow> quality_table();

}  // namespace uwb
