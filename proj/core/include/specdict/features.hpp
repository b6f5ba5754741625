#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "specdict/audio.hpp"

namespace specdict {

// Frames with L2 norm at or below this are treated as silent: they are
// excluded from dictionary learning and reported as unclassifiable.
inline constexpr double kSilenceEpsilon = 1e-10;

enum class Window { hann, rect };

struct FramingConfig {
  double frame_ms = 60.0;
  double hop_ms = 15.0;
  Window window = Window::hann;
  uint32_t fft_size = 0;  // 0 = auto: smallest power of two >= frame length

  int frame_length(uint32_t sample_rate) const;
  int hop_length(uint32_t sample_rate) const;
  uint32_t resolved_fft_size(uint32_t sample_rate) const;
  void validate(uint32_t sample_rate) const;  // throws ConfigError
};

// One frame's magnitude spectrum, bins 0..fft_size/2 (size fft_size/2 + 1).
struct FeatureVector {
  Eigen::VectorXd bins;
  bool silent = false;  // set by normalize() for near-silent frames
};

// Number of complete frames in a signal of `len` samples.
// Requires len >= frame_len; equals floor((len - frame_len)/hop_len) + 1.
long frame_count(long len, int frame_len, int hop_len);

// Windowed magnitude-STFT features, one per frame. Throws DataError
// ("signal too short") if the signal holds less than one frame.
std::vector<FeatureVector> frame_signal(const AudioSignal& signal, const FramingConfig& cfg);

// L2 normalization. Near-silent frames are returned unchanged, flagged silent.
FeatureVector normalize(const FeatureVector& f);

// Normalizes every frame; silent ones keep their flag and raw bins.
std::vector<FeatureVector> normalize_all(std::vector<FeatureVector> frames);

// Normalized copies of the non-silent frames only (training input).
std::vector<FeatureVector> normalized_nonsilent(const std::vector<FeatureVector>& frames);

}  // namespace specdict
