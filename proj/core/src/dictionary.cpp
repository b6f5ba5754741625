#include "specdict/dictionary.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "specdict/errors.hpp"

namespace specdict {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'C', 'T'};
constexpr uint32_t kFormatVersion = 1;

// Unbiased uniform draw from [0, n) using the raw 64-bit stream, so results
// do not depend on the standard library's distribution implementation.
uint64_t uniform_index(std::mt19937_64& rng, uint64_t n) {
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % n;
  uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

std::vector<size_t> random_permutation(size_t n, std::mt19937_64& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t i = n; i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_index(rng, i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace

void LearnConfig::validate() const {
  if (!(intra_threshold > 0.0) || intra_threshold > 1.0) {
    throw ConfigError("learning.intra_threshold must lie in (0, 1]");
  }
  if (!(inter_threshold > 0.0) || inter_threshold > 1.0) {
    throw ConfigError("learning.inter_threshold must lie in (0, 1]");
  }
  if (atoms_per_source < 1) throw ConfigError("learning.atoms_per_source must be >= 1");
}

std::vector<std::string> ConcatDictionary::labels() const {
  std::vector<std::string> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(s.label);
  return out;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DataError("cosine similarity: size mismatch");
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DataError("degenerate vector");
  return a.dot(b) / (na * nb);
}

SourceDictionary learn_dictionary(const std::vector<FeatureVector>& features,
                                  const std::vector<SourceDictionary>& prior,
                                  const LearnConfig& cfg,
                                  const std::string& label,
                                  const FeatureMeta& feat) {
  cfg.validate();

  const Eigen::Index bins = feat.bins();
  const auto want = static_cast<Eigen::Index>(cfg.atoms_per_source);

  DictionaryMeta meta{feat, cfg.intra_threshold, cfg.inter_threshold,
                      cfg.atoms_per_source, cfg.rng_seed};
  for (const auto& d : prior) {
    if (!(d.meta == meta)) throw DataError("dictionary meta mismatch with prior source");
  }

  if (static_cast<Eigen::Index>(features.size()) < want) {
    throw DataError("insufficient training data: " + std::to_string(features.size()) +
                    " features for " + std::to_string(want) + " atoms");
  }
  for (const auto& f : features) {
    if (f.bins.size() != bins) throw DataError("feature dimension mismatch");
    if (f.silent || f.bins.norm() <= kSilenceEpsilon) {
      throw DataError("silent feature passed to dictionary learning");
    }
  }

  Eigen::Index prior_atoms = 0;
  for (const auto& d : prior) prior_atoms += d.atoms.cols();
  Eigen::MatrixXd prior_matrix(bins, prior_atoms);
  {
    Eigen::Index col = 0;
    for (const auto& d : prior) {
      prior_matrix.middleCols(col, d.atoms.cols()) = d.atoms;
      col += d.atoms.cols();
    }
  }

  // Stream depends on the source's position in the chain, so a whole
  // multi-source run reproduces from one seed.
  std::seed_seq seq{static_cast<uint32_t>(cfg.rng_seed),
                    static_cast<uint32_t>(cfg.rng_seed >> 32),
                    static_cast<uint32_t>(prior.size())};
  std::mt19937_64 rng(seq);
  const std::vector<size_t> order = random_permutation(features.size(), rng);

  Eigen::MatrixXd atoms(bins, want);
  std::vector<char> taken(features.size(), 0);
  Eigen::Index accepted = 0;

  for (size_t idx : order) {
    if (accepted >= want) break;
    const Eigen::VectorXd& f = features[idx].bins;

    // Atoms and candidates are unit norm, so dot products are cosines.
    double intra = accepted > 0
                       ? (atoms.leftCols(accepted).transpose() * f).maxCoeff()
                       : -std::numeric_limits<double>::infinity();
    if (intra > cfg.intra_threshold) continue;
    if (prior_atoms > 0) {
      double inter = (prior_matrix.transpose() * f).maxCoeff();
      if (inter > cfg.inter_threshold) continue;
    }
    atoms.col(accepted++) = f;
    taken[idx] = 1;
  }

  if (accepted < want) {
    // Fill remaining slots with rejected features, closest-to-orthogonal
    // first: increasing max similarity against the accepted set, ties by
    // original feature index.
    std::vector<std::pair<double, size_t>> pool;
    pool.reserve(features.size() - static_cast<size_t>(accepted));
    for (size_t idx = 0; idx < features.size(); ++idx) {
      if (taken[idx]) continue;
      double key = accepted > 0
                       ? (atoms.leftCols(accepted).transpose() * features[idx].bins).maxCoeff()
                       : 0.0;
      pool.emplace_back(key, idx);
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    Eigen::Index col = accepted;
    for (const auto& [key, idx] : pool) {
      if (col >= want) break;
      atoms.col(col++) = features[idx].bins;
    }
  }

  SourceDictionary dict;
  dict.label = label;
  dict.atoms = std::move(atoms);
  dict.meta = meta;
  dict.accepted = accepted;
  return dict;
}

ConcatDictionary concat(std::vector<SourceDictionary> dicts) {
  if (dicts.empty()) throw DataError("concat: no dictionaries given");
  const DictionaryMeta& meta = dicts.front().meta;
  for (const auto& d : dicts) {
    if (!(d.meta == meta)) throw DataError("concat: dictionary meta mismatch");
  }

  Eigen::Index total = 0;
  for (const auto& d : dicts) total += d.atoms.cols();

  ConcatDictionary out;
  out.offsets.reserve(dicts.size());
  out.atoms.resize(meta.features.bins(), total);
  Eigen::Index col = 0;
  for (const auto& d : dicts) {
    out.offsets.push_back(col);
    out.atoms.middleCols(col, d.atoms.cols()) = d.atoms;
    col += d.atoms.cols();
  }
  out.sources = std::move(dicts);
  return out;
}

namespace {

struct FileWriter {
  std::string buf;

  void u16(uint16_t v) {
    for (int i = 0; i < 2; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
};

struct FileParser {
  std::vector<char> data;
  size_t pos = 0;
  std::string name;

  void need(size_t n) const {
    if (pos + n > data.size()) {
      throw DataError(name + ": dictionary file truncated at offset " + std::to_string(pos));
    }
  }
  uint16_t u16() {
    need(2);
    uint16_t v = 0;
    for (int i = 1; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(data[pos + static_cast<size_t>(i)]);
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(data[pos + static_cast<size_t>(i)]);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(data[pos + static_cast<size_t>(i)]);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace

void save_dictionary(const std::filesystem::path& path, const ConcatDictionary& dict) {
  if (dict.sources.empty()) throw DataError("save_dictionary: empty dictionary");
  const DictionaryMeta& meta = dict.meta();

  FileWriter w;
  w.buf.append(kMagic, 4);
  w.u32(kFormatVersion);
  w.u32(meta.features.sample_rate);
  w.u32(meta.features.fft_size);
  w.f64(meta.features.frame_ms);
  w.f64(meta.features.hop_ms);
  w.f64(meta.intra_threshold);
  w.f64(meta.inter_threshold);
  w.u32(meta.atoms_per_source);
  w.u32(static_cast<uint32_t>(dict.sources.size()));
  w.u64(meta.rng_seed);

  for (const auto& src : dict.sources) {
    if (src.label.size() > std::numeric_limits<uint16_t>::max()) {
      throw DataError("save_dictionary: label too long");
    }
    w.u16(static_cast<uint16_t>(src.label.size()));
    w.buf += src.label;
    for (Eigen::Index c = 0; c < src.atoms.cols(); ++c) {
      for (Eigen::Index r = 0; r < src.atoms.rows(); ++r) w.f64(src.atoms(r, c));
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot open for writing: " + path.string());
  file.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
  if (!file) throw DataError("write failed: " + path.string());
}

ConcatDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open file: " + path.string());

  FileParser p;
  p.name = path.string();
  p.data.assign(std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>());

  p.need(4);
  if (std::memcmp(p.data.data(), kMagic, 4) != 0) {
    throw DataError(path.string() + ": not a dictionary file");
  }
  p.pos = 4;
  uint32_t version = p.u32();
  if (version != kFormatVersion) {
    throw DataError(path.string() + ": unsupported dictionary version " +
                    std::to_string(version));
  }

  DictionaryMeta meta;
  meta.features.sample_rate = p.u32();
  meta.features.fft_size = p.u32();
  meta.features.frame_ms = p.f64();
  meta.features.hop_ms = p.f64();
  meta.intra_threshold = p.f64();
  meta.inter_threshold = p.f64();
  meta.atoms_per_source = p.u32();
  uint32_t source_count = p.u32();
  meta.rng_seed = p.u64();

  if (meta.features.fft_size < 2 || meta.features.sample_rate == 0 ||
      meta.atoms_per_source == 0 || source_count == 0) {
    throw DataError(path.string() + ": corrupt dictionary header");
  }

  const Eigen::Index bins = meta.features.bins();
  std::vector<SourceDictionary> sources;
  sources.reserve(source_count);
  for (uint32_t s = 0; s < source_count; ++s) {
    SourceDictionary src;
    uint16_t label_len = p.u16();
    p.need(label_len);
    src.label.assign(p.data.data() + p.pos, label_len);
    p.pos += label_len;

    src.atoms.resize(bins, static_cast<Eigen::Index>(meta.atoms_per_source));
    for (Eigen::Index c = 0; c < src.atoms.cols(); ++c) {
      for (Eigen::Index r = 0; r < bins; ++r) src.atoms(r, c) = p.f64();
    }
    src.meta = meta;
    sources.push_back(std::move(src));
  }

  if (p.pos != p.data.size()) {
    throw DataError(path.string() + ": unexpected trailing data at offset " +
                    std::to_string(p.pos));
  }
  return concat(std::move(sources));
}

}  // namespace specdict
