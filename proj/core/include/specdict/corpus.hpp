#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "specdict/classify.hpp"
#include "specdict/dictionary.hpp"
#include "specdict/features.hpp"

namespace specdict {

struct CorpusSource {
  std::string label;
  std::vector<std::filesystem::path> files;
};

enum class SplitMode { tail_test, head_test };

struct CorpusSpec {
  std::vector<CorpusSource> sources;
  double test_seconds = 5.0;
  SplitMode split = SplitMode::tail_test;
};

struct SourceFeatures {
  std::string label;
  std::vector<FeatureVector> train;  // raw magnitude frames
  std::vector<FeatureVector> test;
};

struct SplitCorpus {
  std::vector<SourceFeatures> sources;
  uint32_t sample_rate = 0;
};

// Reads each source's files (concatenated in order), carves the test segment
// from the head or tail, and frames both parts independently so no frame
// straddles the split boundary. All files of a corpus must share one sample
// rate. Throws DataError for unreadable files, rate mismatches, or sources
// too short to yield at least one training and one test frame.
SplitCorpus split_corpus(const CorpusSpec& spec, const FramingConfig& framing);

enum class SynthKind { bandpass_noise, harmonic_tone, am_noise };

struct SyntheticSourceSpec {
  SynthKind kind = SynthKind::bandpass_noise;
  double band_lo_hz = 0.0;      // bandpass_noise
  double band_hi_hz = 0.0;
  double fundamental_hz = 0.0;  // harmonic_tone: first 8 harmonics, slow drift
  double mod_rate_hz = 0.0;     // am_noise: sinusoidal envelope rate
  double duration_s = 1.0;
  uint64_t rng_seed = 0;
};

// Deterministic test-signal generator (bit-identical for equal seeds).
AudioSignal generate_synthetic(const SyntheticSourceSpec& spec, uint32_t sample_rate);

// Six well-separated sources: three disjoint noise bands, two harmonic tones
// with unrelated fundamentals, one broadband AM noise.
std::vector<std::pair<std::string, SyntheticSourceSpec>> default_synthetic_suite(
    double duration_s, uint64_t base_seed);

struct MeasureResult {
  Eigen::VectorXd per_source_accuracy;   // percent, one entry per source
  double overall_frame_accuracy = 0.0;   // percent, frame-weighted
  double overall_source_accuracy = 0.0;  // percent, mean over sources
  Eigen::MatrixXi confusion;             // rows: true source, cols: predicted
};

struct EvalReport {
  std::vector<std::string> labels;
  MeasureResult sdr, nnz, sw;
  // Moving-sum stream accuracy (%) per source (rows) and window length P
  // (cols, P = 1..max_window), computed over complete windows only.
  Eigen::MatrixXd masdr_accuracy;
  // Smallest P reaching 100% stream accuracy per source; -1 if none does.
  std::vector<int> masdr_min_window;
  std::vector<long> classified_frames;  // non-silent test frames per source
  std::vector<long> silent_frames;
  long solver_failures = 0;
  long total_solves = 0;
  long frames_with_failure = 0;  // frames where at least one solve missed the KKT tolerance
};

// Classifies every non-silent test frame with all three measures and fills
// the confusion matrices and moving-sum accuracy curves. test_per_source must
// align with the dictionary's source order.
EvalReport evaluate(const ConcatDictionary& dict,
                    const std::vector<std::vector<FeatureVector>>& test_per_source,
                    const SolverConfig& solver, int max_window = 20);

// Human-readable aligned table.
std::string format_report(const EvalReport& report);

// Lossless JSON round trip.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

// Writes report.txt, report.json, accuracy.csv, masdr.csv and one
// confusion_<measure>.csv per measure into `dir` (created if needed).
void write_report_files(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace specdict
