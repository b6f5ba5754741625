#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "specdict/features.hpp"

namespace specdict {

struct LearnConfig {
  double intra_threshold = 0.95;   // max cosine similarity within one source
  double inter_threshold = 0.95;   // max cosine similarity against earlier sources
  uint32_t atoms_per_source = 100;
  uint64_t rng_seed = 0;

  void validate() const;  // throws ConfigError
};

// Framing parameters the features were extracted with. Dictionaries and
// test inputs must agree on all four fields.
struct FeatureMeta {
  uint32_t sample_rate = 0;
  uint32_t fft_size = 0;
  double frame_ms = 0.0;
  double hop_ms = 0.0;

  Eigen::Index bins() const { return static_cast<Eigen::Index>(fft_size) / 2 + 1; }
  bool operator==(const FeatureMeta&) const = default;
};

struct DictionaryMeta {
  FeatureMeta features;
  double intra_threshold = 0.0;
  double inter_threshold = 0.0;
  uint32_t atoms_per_source = 0;
  uint64_t rng_seed = 0;

  bool operator==(const DictionaryMeta&) const = default;
};

// One source's dictionary: unit-norm non-negative atoms as columns.
struct SourceDictionary {
  std::string label;
  Eigen::MatrixXd atoms;  // bins x atoms_per_source
  DictionaryMeta meta;
  // Number of leading columns selected by the similarity thresholds; the
  // remaining columns were appended as fallback. -1 when unknown (loaded
  // from file). Not persisted.
  Eigen::Index accepted = -1;
};

// Horizontal concatenation of per-source dictionaries.
struct ConcatDictionary {
  std::vector<SourceDictionary> sources;
  std::vector<Eigen::Index> offsets;  // start column of each source in `atoms`
  Eigen::MatrixXd atoms;              // bins x (M * atoms_per_source)

  Eigen::Index source_count() const { return static_cast<Eigen::Index>(sources.size()); }
  Eigen::Index total_atoms() const { return atoms.cols(); }
  const DictionaryMeta& meta() const { return sources.front().meta; }
  std::vector<std::string> labels() const;
  // Column range of source i within `atoms`.
  Eigen::Index block_size(Eigen::Index i) const { return sources[static_cast<size_t>(i)].atoms.cols(); }
};

// cos(a,b) = a.b / (|a||b|); in [0,1] for non-negative inputs.
// Throws DataError("degenerate vector") on zero-norm input.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Learns one source dictionary by randomized atom selection.
//
// Candidates are visited in a seeded random order without replacement. A
// candidate becomes an atom when its max cosine similarity against the atoms
// already chosen for this source is <= intra_threshold and, when `prior` is
// non-empty, its max similarity against every atom of every prior dictionary
// is <= inter_threshold. If fewer than atoms_per_source candidates pass, the
// remaining slots are filled with rejected features ordered by increasing
// max intra-class similarity (measured against the final accepted set; ties
// broken by original feature index).
//
// The random stream is derived from (cfg.rng_seed, prior.size()), so a full
// training run is reproducible from a single seed.
SourceDictionary learn_dictionary(const std::vector<FeatureVector>& features,
                                  const std::vector<SourceDictionary>& prior,
                                  const LearnConfig& cfg,
                                  const std::string& label,
                                  const FeatureMeta& feat);

// Column-wise concatenation; all dictionaries must share identical meta.
ConcatDictionary concat(std::vector<SourceDictionary> dicts);

// Binary dictionary file, little-endian. Layout:
//   magic "SDCT", version u32
//   sample_rate u32, fft_size u32, frame_ms f64, hop_ms f64,
//   intra f64, inter f64, atoms_per_source u32, source_count u32, rng_seed u64
//   per source: label length u16, UTF-8 label, bins x atoms_per_source f64
//   column-major atom block.
void save_dictionary(const std::filesystem::path& path, const ConcatDictionary& dict);
ConcatDictionary load_dictionary(const std::filesystem::path& path);

}  // namespace specdict
