#include "specdict/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "specdict/errors.hpp"
#include "specdict/features.hpp"

namespace specdict {

namespace {

void record(SolveStats* stats, const SolveReport& report) {
  if (!stats) return;
  ++stats->solves;
  if (!report.converged) ++stats->failures;
}

}  // namespace

double sdr_db(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size()) throw DataError("SDR: size mismatch");
  double signal = y.norm();
  if (signal <= kSilenceEpsilon) throw DataError("silent frame");
  double distortion = (y - yhat).norm();
  if (distortion < signal * 1e-15) return kSdrCapDb;
  return std::min(20.0 * std::log10(signal / distortion), kSdrCapDb);
}

Eigen::Index argmax_lowest(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Eigen::VectorXd score_frame_sdr(const Eigen::VectorXd& y, const ConcatDictionary& dict,
                                const SolverConfig& cfg, SolveStats* stats) {
  if (dict.sources.empty()) throw DataError("empty dictionary");
  Eigen::VectorXd out(dict.source_count());
  for (Eigen::Index i = 0; i < dict.source_count(); ++i) {
    const auto& src = dict.sources[static_cast<size_t>(i)];
    auto [x, report] = solve_weights(y, src.atoms, cfg);
    record(stats, report);
    out[i] = sdr_db(y, src.atoms * x);
  }
  return out;
}

ConcatScores score_frame_concat(const Eigen::VectorXd& y, const ConcatDictionary& dict,
                                const SolverConfig& cfg, SolveStats* stats) {
  if (dict.sources.empty()) throw DataError("empty dictionary");
  auto [x, report] = solve_weights(y, dict.atoms, cfg);
  record(stats, report);

  const double tol = kNnzRelativeTol * x.maxCoeff();
  const Eigen::Index m = dict.source_count();
  ConcatScores scores;
  scores.nnz = Eigen::VectorXi::Zero(m);
  scores.sw = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto block = x.segment(dict.offsets[static_cast<size_t>(i)], dict.block_size(i));
    scores.nnz[i] = static_cast<int>((block.array() > tol).count());
    scores.sw[i] = block.sum();
  }
  return scores;
}

FrameScores score_frame(const Eigen::VectorXd& y, const ConcatDictionary& dict,
                        const SolverConfig& cfg, SolveStats* stats) {
  FrameScores out;
  out.sdr = score_frame_sdr(y, dict, cfg, stats);
  ConcatScores concat_scores = score_frame_concat(y, dict, cfg, stats);
  out.nnz = std::move(concat_scores.nnz);
  out.sw = std::move(concat_scores.sw);
  out.predicted_sdr = argmax_lowest(out.sdr);
  out.predicted_nnz = argmax_lowest(out.nnz.cast<double>());
  out.predicted_sw = argmax_lowest(out.sw);
  return out;
}

Eigen::Index cascade_predict(const Eigen::VectorXd& y, const ConcatDictionary& dict,
                             const SolverConfig& cfg, int shortlist, SolveStats* stats) {
  const Eigen::Index m = dict.source_count();
  ConcatScores scores = score_frame_concat(y, dict, cfg, stats);

  std::vector<Eigen::Index> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&scores](Eigen::Index a, Eigen::Index b) {
    return scores.sw[a] > scores.sw[b];
  });
  const auto keep = std::min<Eigen::Index>(m, std::max(shortlist, 1));

  Eigen::Index best = -1;
  double best_sdr = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < keep; ++r) {
    Eigen::Index i = order[static_cast<size_t>(r)];
    const auto& src = dict.sources[static_cast<size_t>(i)];
    auto [x, report] = solve_weights(y, src.atoms, cfg);
    record(stats, report);
    double s = sdr_db(y, src.atoms * x);
    if (s > best_sdr || (s == best_sdr && i < best)) {
      best_sdr = s;
      best = i;
    }
  }
  return best;
}

StreamState::StreamState(Eigen::Index source_count, int window)
    : window_(window), accumulated_(Eigen::VectorXd::Zero(source_count)) {
  if (source_count < 1) throw ConfigError("stream: source count must be >= 1");
  if (window < 1) throw ConfigError("stream: window must be >= 1");
}

void StreamState::add_frame(const Eigen::VectorXd& sdr) {
  if (sdr.size() != accumulated_.size()) throw DataError("stream: SDR vector length mismatch");
  accumulated_ += sdr;
  buffer_.push_back(sdr);
  if (static_cast<int>(buffer_.size()) > window_) buffer_.pop_front();
  ++frames_;
}

Eigen::VectorXd StreamState::moving() const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(accumulated_.size());
  for (const auto& v : buffer_) sum += v;
  return sum;
}

Eigen::Index StreamState::predicted() const { return argmax_lowest(moving()); }

}  // namespace specdict
