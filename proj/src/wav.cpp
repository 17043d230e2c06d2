#include "uwbaudio/wav.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "uwbaudio/audio_core.hpp"
#include "uwbaudio/error.hpp"

namespace uwb {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t rd16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t rd32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

void wr16(std::vector<std::uint8_t>& o, std::uint16_t v) {
  o.push_back(static_cast<std::uint8_t>(v));
  o.push_back(static_cast<std::uint8_t>(v >> 8));
}
void wr32(std::vector<std::uint8_t>& o, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) o.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void wrtag(std::vector<std::uint8_t>& o, const char* tag) { o.insert(o.end(), tag, tag + 4); }

}  // namespace

WavData parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ProtocolError("not a RIFF/WAVE file");
  }
  std::optional<AudioFormat> format;
  std::optional<std::span<const std::uint8_t>> data;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    std::size_t size = rd32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Streamed writers sometimes leave a bogus data size; clamp to the file.
      if (std::memcmp(chunk, "data", 4) != 0) throw ProtocolError("chunk overruns file");
      size = bytes.size() - body;
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw ProtocolError("fmt chunk too short");
      const std::uint8_t* f = bytes.data() + body;
      std::uint16_t tag = rd16(f);
      if (tag == kFormatExtensible && size >= 40) tag = rd16(f + 24);
      if (tag != kFormatPcm) throw ProtocolError("unsupported WAV format tag " + std::to_string(tag));
      AudioFormat fmt{rd32(f + 4), rd16(f + 14), rd16(f + 2)};
      validate(fmt);
      if (rd16(f + 12) != fmt.frame_bytes()) throw ProtocolError("inconsistent block align");
      format = fmt;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.subspan(body, size);
    }
    pos = body + size + (size & 1);
  }
  if (!format) throw ProtocolError("missing fmt chunk");
  if (!data) throw ProtocolError("missing data chunk");
  WavData out;
  out.format = *format;
  const std::size_t usable = data->size() - data->size() % format->frame_bytes();
  out.samples = pcm_decode(data->first(usable), *format);
  return out;
}

std::vector<std::uint8_t> serialize_wav(const AudioFormat& format,
                                        std::span<const std::int32_t> samples) {
  validate(format);
  std::vector<std::uint8_t> pcm;
  pcm_append(samples, format.bit_depth, pcm);
  std::vector<std::uint8_t> out;
  out.reserve(44 + pcm.size() + 1);
  wrtag(out, "RIFF");
  wr32(out, static_cast<std::uint32_t>(36 + pcm.size() + (pcm.size() & 1)));
  wrtag(out, "WAVE");
  wrtag(out, "fmt ");
  wr32(out, 16);
  wr16(out, kFormatPcm);
  wr16(out, static_cast<std::uint16_t>(format.channels));
  wr32(out, format.sampling_rate_hz);
  wr32(out, format.sampling_rate_hz * format.frame_bytes());
  wr16(out, static_cast<std::uint16_t>(format.frame_bytes()));
  wr16(out, static_cast<std::uint16_t>(format.bit_depth));
  wrtag(out, "data");
  wr32(out, static_cast<std::uint32_t>(pcm.size()));
  out.insert(out.end(), pcm.begin(), pcm.end());
  if (pcm.size() & 1) out.push_back(0);
  return out;
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

void write_wav(const std::filesystem::path& path, const AudioFormat& format,
               std::span<const std::int32_t> samples) {
  auto bytes = serialize_wav(format, samples);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace uwb
