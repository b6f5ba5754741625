#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace specdict {

// Mono time-domain signal. Samples are dimensionless amplitudes in [-1, 1].
struct AudioSignal {
  std::vector<double> samples;
  uint32_t sample_rate = 0;  // Hz

  double duration_s() const {
    return sample_rate ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Reads a little-endian PCM WAV file. Supported encodings: 16-bit integer
// and 32-bit IEEE float (plain or WAVE_FORMAT_EXTENSIBLE). Multi-channel
// content is downmixed to mono by averaging channels; integer samples are
// scaled to [-1, 1].
AudioSignal read_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM; samples are clamped to [-1, 1] before quantization.
void write_wav16(const std::filesystem::path& path, const AudioSignal& signal);

// Writes mono 32-bit IEEE float (lossless for float data).
void write_wav_float32(const std::filesystem::path& path, const AudioSignal& signal);

}  // namespace specdict
