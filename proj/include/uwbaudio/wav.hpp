#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uwbaudio/audio_format.hpp"

namespace uwb {

struct WavData {
  AudioFormat format;
  std::vector<std::int32_t> samples;  // interleaved, sign-extended
};

/// RIFF/WAVE with PCM format tag 1 (or WAVE_FORMAT_EXTENSIBLE carrying PCM),
/// 16- or 24-bit little-endian. Unknown chunks are skipped.
WavData parse_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_wav(const AudioFormat& format,
                                        std::span<const std::int32_t> samples);

WavData read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioFormat& format,
               std::span<const std::int32_t> samples);

}  // namespace uwb
