#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "specdict/features.hpp"

namespace testsupport {

// Strictly positive vector with entries in [lo, lo + span).
inline Eigen::VectorXd random_positive(Eigen::Index n, std::mt19937_64& rng, double lo = 0.05,
                                       double span = 1.0) {
  std::uniform_real_distribution<double> dist(lo, lo + span);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

// Dictionary with strictly positive unit-norm columns.
inline Eigen::MatrixXd random_dictionary(Eigen::Index rows, Eigen::Index cols,
                                         std::mt19937_64& rng) {
  Eigen::MatrixXd d(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    Eigen::VectorXd col = random_positive(rows, rng);
    d.col(c) = col / col.norm();
  }
  return d;
}

// Block dictionary whose sources occupy disjoint bin ranges; source i uses
// rows [i*band, (i+1)*band).
inline std::vector<Eigen::MatrixXd> orthogonal_block_atoms(Eigen::Index sources,
                                                           Eigen::Index band,
                                                           Eigen::Index atoms_each,
                                                           std::mt19937_64& rng) {
  std::vector<Eigen::MatrixXd> out;
  const Eigen::Index rows = sources * band;
  for (Eigen::Index s = 0; s < sources; ++s) {
    Eigen::MatrixXd atoms = Eigen::MatrixXd::Zero(rows, atoms_each);
    for (Eigen::Index a = 0; a < atoms_each; ++a) {
      Eigen::VectorXd sub = random_positive(band, rng);
      atoms.col(a).segment(s * band, band) = sub / sub.norm();
    }
    out.push_back(std::move(atoms));
  }
  return out;
}

// O(N^2) reference DFT, all N bins.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (size_t t = 0; t < n; ++t) {
      double angle = -2.0 * std::numbers::pi * static_cast<double>(k) *
                     static_cast<double>(t) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("specdict_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<specdict::FeatureVector> to_features(const Eigen::MatrixXd& columns) {
  std::vector<specdict::FeatureVector> out;
  out.reserve(static_cast<size_t>(columns.cols()));
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    out.push_back({columns.col(c), false});
  }
  return out;
}

}  // namespace testsupport
