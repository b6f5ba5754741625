#include "specdict/features.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

#include "specdict/errors.hpp"

namespace specdict {

int FramingConfig::frame_length(uint32_t sample_rate) const {
  return static_cast<int>(std::lround(frame_ms * sample_rate / 1000.0));
}

int FramingConfig::hop_length(uint32_t sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

uint32_t FramingConfig::resolved_fft_size(uint32_t sample_rate) const {
  if (fft_size != 0) return fft_size;
  auto frame_len = static_cast<uint32_t>(frame_length(sample_rate));
  uint32_t n = 1;
  while (n < frame_len) n <<= 1;
  return n;
}

void FramingConfig::validate(uint32_t sample_rate) const {
  if (sample_rate == 0) throw ConfigError("sample rate must be positive");
  if (!(frame_ms > 0.0)) throw ConfigError("framing.frame_ms must be positive");
  if (!(hop_ms > 0.0) || hop_ms > frame_ms) {
    throw ConfigError("framing.hop_ms must satisfy 0 < hop_ms <= frame_ms");
  }
  int frame_len = frame_length(sample_rate);
  if (frame_len < 1) throw ConfigError("frame length is below one sample");
  if (hop_length(sample_rate) < 1) throw ConfigError("hop length is below one sample");
  if (fft_size != 0 && fft_size < static_cast<uint32_t>(frame_len)) {
    throw ConfigError("framing.fft_size must be at least the frame length (" +
                      std::to_string(frame_len) + " samples)");
  }
}

long frame_count(long len, int frame_len, int hop_len) {
  if (len < frame_len) throw DataError("signal too short");
  return (len - frame_len) / hop_len + 1;
}

std::vector<FeatureVector> frame_signal(const AudioSignal& signal, const FramingConfig& cfg) {
  cfg.validate(signal.sample_rate);

  const int frame_len = cfg.frame_length(signal.sample_rate);
  const int hop_len = cfg.hop_length(signal.sample_rate);
  const auto fft_len = static_cast<long>(cfg.resolved_fft_size(signal.sample_rate));
  const long len = static_cast<long>(signal.samples.size());
  const long bins = fft_len / 2 + 1;

  for (double s : signal.samples) {
    if (!std::isfinite(s)) throw DataError("signal contains non-finite samples");
  }

  const long frames = frame_count(len, frame_len, hop_len);

  Eigen::VectorXd window(frame_len);
  if (cfg.window == Window::hann) {
    for (int n = 0; n < frame_len; ++n) {
      window[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / frame_len));
    }
  } else {
    window.setOnes();
  }

  Eigen::FFT<double> fft;
  std::vector<double> buffer(static_cast<size_t>(fft_len), 0.0);
  std::vector<std::complex<double>> spectrum;

  std::vector<FeatureVector> out;
  out.reserve(static_cast<size_t>(frames));
  for (long t = 0; t < frames; ++t) {
    const double* frame = signal.samples.data() + t * hop_len;
    for (int n = 0; n < frame_len; ++n) buffer[static_cast<size_t>(n)] = frame[n] * window[n];
    std::fill(buffer.begin() + frame_len, buffer.end(), 0.0);
    fft.fwd(spectrum, buffer);

    FeatureVector f;
    f.bins.resize(bins);
    for (long k = 0; k < bins; ++k) f.bins[k] = std::abs(spectrum[static_cast<size_t>(k)]);
    out.push_back(std::move(f));
  }
  return out;
}

FeatureVector normalize(const FeatureVector& f) {
  double norm = f.bins.norm();
  if (norm > kSilenceEpsilon) {
    return FeatureVector{f.bins / norm, false};
  }
  return FeatureVector{f.bins, true};
}

std::vector<FeatureVector> normalize_all(std::vector<FeatureVector> frames) {
  for (auto& f : frames) f = normalize(f);
  return frames;
}

std::vector<FeatureVector> normalized_nonsilent(const std::vector<FeatureVector>& frames) {
  std::vector<FeatureVector> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    FeatureVector nf = normalize(f);
    if (!nf.silent) out.push_back(std::move(nf));
  }
  return out;
}

}  // namespace specdict
