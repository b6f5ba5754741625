#include "specdict/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "specdict/errors.hpp"

namespace specdict {

namespace {

constexpr uint16_t kFormatPcm = 0x0001;
constexpr uint16_t kFormatIeeeFloat = 0x0003;
constexpr uint16_t kFormatExtensible = 0xFFFE;

struct Reader {
  std::vector<char> data;
  size_t pos = 0;
  std::string name;

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(name + ": " + what + " at offset " + std::to_string(pos));
  }
  void need(size_t n) const {
    if (pos + n > data.size()) {
      throw DataError(name + ": truncated WAV file at offset " + std::to_string(pos));
    }
  }
  void skip(size_t n) {
    need(n);
    pos += n;
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint8_t>(data[pos]) |
                 (static_cast<uint16_t>(static_cast<uint8_t>(data[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
      v = (v << 8) | static_cast<uint8_t>(data[pos + static_cast<size_t>(i)]);
    }
    pos += 4;
    return v;
  }
  std::string tag() {
    need(4);
    std::string t(data.data() + pos, 4);
    pos += 4;
    return t;
  }
};

void append_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void append_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void write_wav(const std::filesystem::path& path, const AudioSignal& signal,
               uint16_t format, uint16_t bits) {
  if (signal.sample_rate == 0) throw ConfigError("sample rate must be positive");

  const uint16_t block_align = static_cast<uint16_t>(bits / 8);
  const uint32_t data_bytes = static_cast<uint32_t>(signal.samples.size()) * block_align;

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  append_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  append_u32(out, 16);
  append_u16(out, format);
  append_u16(out, 1);  // mono
  append_u32(out, signal.sample_rate);
  append_u32(out, signal.sample_rate * block_align);
  append_u16(out, block_align);
  append_u16(out, bits);
  out += "data";
  append_u32(out, data_bytes);

  for (double s : signal.samples) {
    if (format == kFormatPcm) {
      double clamped = std::clamp(s, -1.0, 1.0);
      auto q = static_cast<int16_t>(std::lrint(clamped * 32767.0));
      append_u16(out, static_cast<uint16_t>(q));
    } else {
      float f = static_cast<float>(s);
      uint32_t bitsrep = std::bit_cast<uint32_t>(f);
      append_u32(out, bitsrep);
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot open for writing: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("write failed: " + path.string());
}

}  // namespace

AudioSignal read_wav(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open file: " + path.string());

  Reader r;
  r.name = path.string();
  r.data.assign(std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>());

  if (r.tag() != "RIFF") throw DataError(path.string() + ": not a WAV file (missing RIFF)");
  r.u32();  // RIFF payload size; trust chunk sizes instead
  if (r.tag() != "WAVE") throw DataError(path.string() + ": not a WAV file (missing WAVE)");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;

  AudioSignal signal;

  while (r.pos + 8 <= r.data.size()) {
    std::string id = r.tag();
    uint32_t size = r.u32();
    size_t chunk_end = r.pos + size;

    if (id == "fmt ") {
      if (size < 16) r.fail("fmt chunk too small");
      format = r.u16();
      channels = r.u16();
      sample_rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      if (format == kFormatExtensible) {
        if (size < 40) r.fail("extensible fmt chunk too small");
        r.u16();  // cbSize
        r.u16();  // valid bits
        r.u32();  // channel mask
        format = r.u16();  // first two bytes of the subformat GUID
      }
      have_fmt = true;
      r.pos = chunk_end;
    } else if (id == "data") {
      if (!have_fmt) r.fail("data chunk before fmt");
      if (channels == 0) r.fail("zero channels");
      if (sample_rate == 0) r.fail("zero sample rate");

      bool pcm16 = format == kFormatPcm && bits == 16;
      bool float32 = format == kFormatIeeeFloat && bits == 32;
      if (!pcm16 && !float32) {
        throw DataError(path.string() + ": unsupported WAV encoding (format " +
                        std::to_string(format) + ", " + std::to_string(bits) +
                        " bits); expected 16-bit PCM or 32-bit float");
      }

      size_t bytes_per_sample = bits / 8u;
      size_t frame_bytes = bytes_per_sample * channels;
      r.need(size);
      size_t frames = size / frame_bytes;
      signal.samples.reserve(frames);
      for (size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (uint16_t c = 0; c < channels; ++c) {
          if (pcm16) {
            auto raw = static_cast<int16_t>(r.u16());
            acc += raw / 32768.0;
          } else {
            acc += std::bit_cast<float>(r.u32());
          }
        }
        signal.samples.push_back(acc / channels);
      }
      signal.sample_rate = sample_rate;
      r.pos = chunk_end;
    } else {
      if (chunk_end > r.data.size()) r.fail("truncated chunk '" + id + "'");
      r.pos = chunk_end;
    }
    if (r.pos % 2 == 1 && r.pos < r.data.size()) ++r.pos;  // chunks are word-aligned
  }

  if (signal.sample_rate == 0) {
    throw DataError(path.string() + ": no data chunk found");
  }
  for (double s : signal.samples) {
    if (!std::isfinite(s)) throw DataError(path.string() + ": non-finite sample value");
  }
  return signal;
}

void write_wav16(const std::filesystem::path& path, const AudioSignal& signal) {
  write_wav(path, signal, kFormatPcm, 16);
}

void write_wav_float32(const std::filesystem::path& path, const AudioSignal& signal) {
  write_wav(path, signal, kFormatIeeeFloat, 32);
}

}  // namespace specdict
