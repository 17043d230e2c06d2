#include <algorithm>
#include <array>

#include "uwbaudio/audio_core.hpp"
#include "uwbaudio/error.hpp"

namespace uwb {
namespace {

constexpr std::array<int, 89> kStepTable = {
    7,     8,     9,     10,    11,    12,    13,    14,    16,    17,    19,    21,    23,
    25,    28,    31,    34,    37,    41,    45,    50,    55,    60,    66,    73,    80,
    88,    97,    107,   118,   130,   143,   157,   173,   190,   209,   230,   253,   279,
    307,   337,   371,   408,   449,   494,   544,   598,   658,   724,   796,   876,   963,
    1060,  1166,  1282,  1411,  1552,  1707,  1878,  2066,  2272,  2499,  2749,  3024,  3327,
    3660,  4026,  4428,  4871,  5358,  5894,  6484,  7132,  7845,  8630,  9493,  10442, 11487,
    12635, 13899, 15289, 16818, 18500, 20350, 22385, 24623, 27086, 29794, 32767};

constexpr std::array<int, 16> kIndexTable = {-1, -1, -1, -1, 2, 4, 6, 8,
                                             -1, -1, -1, -1, 2, 4, 6, 8};

struct ChannelState {
  int predictor = 0;
  int index = 0;
};

// Standard IMA decode step; the encoder runs it too so both sides track
// identical predictor state.
int decode_nibble(ChannelState& st, int code) {
  const int step = kStepTable[st.index];
  int diff = step >> 3;
  if (code & 4) diff += step;
  if (code & 2) diff += step >> 1;
  if (code & 1) diff += step >> 2;
  st.predictor += (code & 8) ? -diff : diff;
  st.predictor = std::clamp(st.predictor, -32768, 32767);
  st.index = std::clamp(st.index + kIndexTable[code], 0, 88);
  return st.predictor;
}

int encode_sample(ChannelState& st, int sample) {
  const int step = kStepTable[st.index];
  int diff = sample - st.predictor;
  int code = 0;
  if (diff < 0) {
    code = 8;
    diff = -diff;
  }
  int threshold = step;
  if (diff >= threshold) {
    code |= 4;
    diff -= threshold;
  }
  threshold >>= 1;
  if (diff >= threshold) {
    code |= 2;
    diff -= threshold;
  }
  threshold >>= 1;
  if (diff >= threshold) code |= 1;
  decode_nibble(st, code);
  return code;
}

void require_16bit(const AudioFormat& format) {
  validate(format);
  if (format.bit_depth != 16) {
    throw ValidationError("bit_depth", "ADPCM path supports 16-bit input only");
  }
}

}  // namespace

AdpcmEncoder::AdpcmEncoder(std::uint32_t channels) : step_index_(channels, 0) {}

std::vector<std::uint8_t> AdpcmEncoder::encode(const AudioBlock& block) {
  require_16bit(block.format);
  const std::uint32_t ch = block.format.channels;
  if (ch != step_index_.size()) throw ValidationError("channels", "encoder channel count mismatch");
  const std::size_t frames = block.frame_count();
  if (frames == 0) return {};
  if (frames > 0xFFFF) throw ValidationError("samples", "ADPCM block limited to 65535 frames");

  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(frames));
  out.push_back(static_cast<std::uint8_t>(frames >> 8));
  std::vector<ChannelState> state(ch);
  for (std::uint32_t c = 0; c < ch; ++c) {
    state[c].predictor = std::clamp(block.samples[c], -32768, 32767);
    state[c].index = step_index_[c];
    const auto pred = static_cast<std::uint16_t>(static_cast<std::int16_t>(state[c].predictor));
    out.push_back(static_cast<std::uint8_t>(pred));
    out.push_back(static_cast<std::uint8_t>(pred >> 8));
    out.push_back(static_cast<std::uint8_t>(state[c].index));
    out.push_back(0);
  }
  bool low = true;
  for (std::size_t f = 1; f < frames; ++f) {
    for (std::uint32_t c = 0; c < ch; ++c) {
      const int code = encode_sample(state[c], block.samples[f * ch + c]);
      if (low) {
        out.push_back(static_cast<std::uint8_t>(code));
      } else {
        out.back() |= static_cast<std::uint8_t>(code << 4);
      }
      low = !low;
    }
  }
  for (std::uint32_t c = 0; c < ch; ++c) step_index_[c] = state[c].index;
  return out;
}

std::vector<std::uint8_t> adpcm_encode(const AudioBlock& block) {
  return AdpcmEncoder(block.format.channels).encode(block);
}

AudioBlock adpcm_decode(std::span<const std::uint8_t> bytes, const AudioFormat& format) {
  require_16bit(format);
  AudioBlock block;
  block.format = format;
  if (bytes.empty()) return block;
  const std::uint32_t ch = format.channels;
  const std::size_t header = 2 + 4 * std::size_t{ch};
  if (bytes.size() < header) throw ProtocolError("ADPCM block header truncated");
  const std::size_t frames = bytes[0] | (bytes[1] << 8);
  const std::size_t codes = (frames - 1) * ch;
  if (frames == 0 || bytes.size() != header + (codes + 1) / 2) {
    throw ProtocolError("ADPCM block length does not match its frame count");
  }
  std::vector<ChannelState> state(ch);
  block.samples.resize(frames * ch);
  for (std::uint32_t c = 0; c < ch; ++c) {
    const auto* h = bytes.data() + 2 + 4 * c;
    state[c].predictor = static_cast<std::int16_t>(h[0] | (h[1] << 8));
    state[c].index = h[2];
    if (state[c].index > 88) throw ProtocolError("ADPCM step index out of range");
    block.samples[c] = state[c].predictor;
  }
  for (std::size_t k = 0; k < codes; ++k) {
    const std::uint8_t byte = bytes[header + k / 2];
    const int code = (k % 2 == 0) ? (byte & 0xF) : (byte >> 4);
    const std::uint32_t c = static_cast<std::uint32_t>(k % ch);
    block.samples[ch + k] = decode_nibble(state[c], code);
  }
  return block;
}

}  // namespace uwb
