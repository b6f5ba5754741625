#pragma once

#include <Eigen/Dense>

#include <deque>

#include "specdict/dictionary.hpp"
#include "specdict/solver.hpp"

namespace specdict {

// SDR is capped here; reached when the residual is below |y| * 1e-15.
inline constexpr double kSdrCapDb = 300.0;

// Relative threshold deciding which weights count as non-zero:
// x_j > kNnzRelativeTol * max(x).
inline constexpr double kNnzRelativeTol = 1e-8;

// Aggregate solver bookkeeping across many frames.
struct SolveStats {
  long solves = 0;
  long failures = 0;  // solves that hit the iteration budget before KKT
};

// 20 log10(|y| / |y - yhat|) in dB, capped at kSdrCapDb.
// Throws DataError on silent y.
double sdr_db(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

// Index of the largest entry; ties resolved to the lowest index.
Eigen::Index argmax_lowest(const Eigen::VectorXd& v);

// SDR of y against each source dictionary separately (one solve per source).
Eigen::VectorXd score_frame_sdr(const Eigen::VectorXd& y, const ConcatDictionary& dict,
                                const SolverConfig& cfg, SolveStats* stats = nullptr);

// Per-source weight statistics from a single solve against the concatenated
// dictionary: nnz_i counts entries of block i above the relative threshold,
// sw_i sums block i.
struct ConcatScores {
  Eigen::VectorXi nnz;
  Eigen::VectorXd sw;
};
ConcatScores score_frame_concat(const Eigen::VectorXd& y, const ConcatDictionary& dict,
                                const SolverConfig& cfg, SolveStats* stats = nullptr);

// All three per-frame measures plus the per-measure argmax predictions.
struct FrameScores {
  Eigen::VectorXd sdr;
  Eigen::VectorXi nnz;
  Eigen::VectorXd sw;
  Eigen::Index predicted_sdr = -1;
  Eigen::Index predicted_nnz = -1;
  Eigen::Index predicted_sw = -1;
};
FrameScores score_frame(const Eigen::VectorXd& y, const ConcatDictionary& dict,
                        const SolverConfig& cfg, SolveStats* stats = nullptr);

// Two-stage prediction: shortlist the top `shortlist` sources by sum of
// weights from one concatenated solve, then pick the best SDR among them.
Eigen::Index cascade_predict(const Eigen::VectorXd& y, const ConcatDictionary& dict,
                             const SolverConfig& cfg, int shortlist = 3,
                             SolveStats* stats = nullptr);

// Stream-level aggregation of per-frame SDR vectors: a running accumulated
// sum and a moving sum over the last `window` frames. The moving sum is
// recomputed from the buffered history on every query, so it matches a
// direct re-summation exactly.
class StreamState {
 public:
  StreamState(Eigen::Index source_count, int window);

  void add_frame(const Eigen::VectorXd& sdr);  // throws DataError on size mismatch

  long frames() const { return frames_; }
  Eigen::Index source_count() const { return accumulated_.size(); }
  const Eigen::VectorXd& accumulated() const { return accumulated_; }  // ASDR
  Eigen::VectorXd moving() const;                                      // MASDR
  Eigen::Index predicted() const;  // argmax of moving sum, ties -> lowest

 private:
  int window_;
  Eigen::VectorXd accumulated_;
  std::deque<Eigen::VectorXd> buffer_;  // last <= window_ SDR vectors
  long frames_ = 0;
};

}  // namespace specdict
