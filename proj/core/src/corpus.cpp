#include "specdict/corpus.hpp"

#include <unsupported/Eigen/FFT>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "specdict/errors.hpp"
#include "specdict/parallel.hpp"

namespace specdict {

namespace {

using json = nlohmann::json;

// Gaussian deviates from the raw 64-bit stream (Box-Muller), so sequences do
// not depend on the standard library's distribution implementation.
class GaussianStream {
 public:
  explicit GaussianStream(uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = unit();
    double u2 = unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double uniform() { return unit(); }

 private:
  double unit() {  // (0, 1)
    return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

void peak_normalize(std::vector<double>& samples, double peak) {
  double max_abs = 0.0;
  for (double s : samples) max_abs = std::max(max_abs, std::abs(s));
  if (max_abs > 0.0) {
    double scale = peak / max_abs;
    for (double& s : samples) s *= scale;
  }
}

std::vector<double> white_noise(size_t n, GaussianStream& gauss) {
  std::vector<double> out(n);
  for (double& s : out) s = gauss.next();
  return out;
}

// Brick-wall bandpass via one large FFT: zero every bin whose frequency lies
// outside [lo, hi].
std::vector<double> bandpass(const std::vector<double>& in, double lo_hz, double hi_hz,
                             uint32_t sample_rate) {
  size_t n = in.size();
  size_t fft_len = 1;
  while (fft_len < n) fft_len <<= 1;

  std::vector<std::complex<double>> time(fft_len, 0.0);
  for (size_t i = 0; i < n; ++i) time[i] = in[i];

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, time);

  for (size_t k = 0; k < fft_len; ++k) {
    size_t mirrored = k <= fft_len / 2 ? k : fft_len - k;
    double freq = static_cast<double>(mirrored) * sample_rate / static_cast<double>(fft_len);
    if (freq < lo_hz || freq > hi_hz) spec[k] = 0.0;
  }

  fft.inv(time, spec);
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = time[i].real();
  return out;
}

// Piecewise-linear random envelope with control points every `segment_s`.
class DriftEnvelope {
 public:
  DriftEnvelope(double duration_s, double segment_s, GaussianStream& gauss) {
    auto points = static_cast<size_t>(duration_s / segment_s) + 2;
    values_.reserve(points);
    for (size_t i = 0; i < points; ++i) values_.push_back(0.7 + 0.6 * gauss.uniform());
    segment_s_ = segment_s;
  }

  double at(double t) const {
    double u = t / segment_s_;
    auto i = static_cast<size_t>(u);
    if (i + 1 >= values_.size()) return values_.back();
    double frac = u - static_cast<double>(i);
    return values_[i] * (1.0 - frac) + values_[i + 1] * frac;
  }

 private:
  std::vector<double> values_;
  double segment_s_ = 1.0;
};

std::vector<FeatureVector> frames_of_segment(const double* begin, long len,
                                             uint32_t sample_rate,
                                             const FramingConfig& framing) {
  AudioSignal segment;
  segment.samples.assign(begin, begin + len);
  segment.sample_rate = sample_rate;
  return frame_signal(segment, framing);
}

json measure_to_json(const MeasureResult& m) {
  json confusion = json::array();
  for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) row.push_back(m.confusion(r, c));
    confusion.push_back(std::move(row));
  }
  return json{{"per_source_accuracy",
               std::vector<double>(m.per_source_accuracy.begin(), m.per_source_accuracy.end())},
              {"overall_frame_accuracy", m.overall_frame_accuracy},
              {"overall_source_accuracy", m.overall_source_accuracy},
              {"confusion", std::move(confusion)}};
}

MeasureResult measure_from_json(const json& j) {
  MeasureResult m;
  auto acc = j.at("per_source_accuracy").get<std::vector<double>>();
  m.per_source_accuracy = Eigen::Map<Eigen::VectorXd>(acc.data(), static_cast<Eigen::Index>(acc.size()));
  m.overall_frame_accuracy = j.at("overall_frame_accuracy").get<double>();
  m.overall_source_accuracy = j.at("overall_source_accuracy").get<double>();
  const auto& confusion = j.at("confusion");
  auto rows = static_cast<Eigen::Index>(confusion.size());
  m.confusion.resize(rows, rows == 0 ? 0 : static_cast<Eigen::Index>(confusion[0].size()));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) {
      m.confusion(r, c) = confusion[static_cast<size_t>(r)][static_cast<size_t>(c)].get<int>();
    }
  }
  return m;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string csv_confusion(const EvalReport& report, const MeasureResult& m) {
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& label : report.labels) out << "," << label;
  out << "\n";
  for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
    out << report.labels[static_cast<size_t>(r)];
    for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) out << "," << m.confusion(r, c);
    out << "\n";
  }
  return out.str();
}

std::string fmt(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

SplitCorpus split_corpus(const CorpusSpec& spec, const FramingConfig& framing) {
  if (spec.sources.empty()) throw DataError("corpus has no sources");
  if (!(spec.test_seconds > 0.0)) throw ConfigError("test_seconds must be positive");

  SplitCorpus out;
  for (const auto& source : spec.sources) {
    if (source.files.empty()) throw DataError("source '" + source.label + "' has no files");

    std::vector<double> samples;
    for (const auto& file : source.files) {
      AudioSignal sig = read_wav(file);
      if (out.sample_rate == 0) out.sample_rate = sig.sample_rate;
      if (sig.sample_rate != out.sample_rate) {
        throw DataError(file.string() + ": sample rate " + std::to_string(sig.sample_rate) +
                        " differs from corpus rate " + std::to_string(out.sample_rate));
      }
      samples.insert(samples.end(), sig.samples.begin(), sig.samples.end());
    }

    framing.validate(out.sample_rate);
    const long frame_len = framing.frame_length(out.sample_rate);
    const long total = static_cast<long>(samples.size());
    const long test_len = std::lround(spec.test_seconds * out.sample_rate);
    const long train_len = total - test_len;
    if (train_len < frame_len || test_len < frame_len) {
      throw DataError("source '" + source.label + "' too short: " + std::to_string(total) +
                      " samples for a " + std::to_string(test_len) + "-sample test split");
    }

    const double* base = samples.data();
    const double* train_begin = spec.split == SplitMode::tail_test ? base : base + test_len;
    const double* test_begin = spec.split == SplitMode::tail_test ? base + train_len : base;

    SourceFeatures sf;
    sf.label = source.label;
    sf.train = frames_of_segment(train_begin, train_len, out.sample_rate, framing);
    sf.test = frames_of_segment(test_begin, test_len, out.sample_rate, framing);
    out.sources.push_back(std::move(sf));
  }
  return out;
}

AudioSignal generate_synthetic(const SyntheticSourceSpec& spec, uint32_t sample_rate) {
  if (sample_rate == 0) throw ConfigError("sample rate must be positive");
  if (!(spec.duration_s > 0.0)) throw ConfigError("duration must be positive");

  const double nyquist = sample_rate / 2.0;
  const auto n = static_cast<size_t>(std::lround(spec.duration_s * sample_rate));
  GaussianStream gauss(spec.rng_seed);

  AudioSignal out;
  out.sample_rate = sample_rate;

  switch (spec.kind) {
    case SynthKind::bandpass_noise: {
      if (!(spec.band_lo_hz >= 0.0) || !(spec.band_hi_hz > spec.band_lo_hz) ||
          spec.band_hi_hz > nyquist) {
        throw ConfigError("band outside Nyquist");
      }
      out.samples = bandpass(white_noise(n, gauss), spec.band_lo_hz, spec.band_hi_hz,
                             sample_rate);
      break;
    }
    case SynthKind::harmonic_tone: {
      constexpr int kHarmonics = 8;
      if (!(spec.fundamental_hz > 0.0) || spec.fundamental_hz * kHarmonics > nyquist) {
        throw ConfigError("band outside Nyquist");
      }
      std::vector<double> phase(kHarmonics);
      std::vector<DriftEnvelope> drift;
      drift.reserve(kHarmonics);
      for (int h = 0; h < kHarmonics; ++h) {
        phase[static_cast<size_t>(h)] = 2.0 * std::numbers::pi * gauss.uniform();
        drift.emplace_back(spec.duration_s, 0.5, gauss);
      }
      out.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / sample_rate;
        double acc = 0.0;
        for (int h = 0; h < kHarmonics; ++h) {
          double freq = spec.fundamental_hz * (h + 1);
          double amp = drift[static_cast<size_t>(h)].at(t) / (h + 1);
          acc += amp * std::sin(2.0 * std::numbers::pi * freq * t + phase[static_cast<size_t>(h)]);
        }
        out.samples[i] = acc;
      }
      break;
    }
    case SynthKind::am_noise: {
      if (!(spec.mod_rate_hz > 0.0) || spec.mod_rate_hz > nyquist) {
        throw ConfigError("band outside Nyquist");
      }
      out.samples = white_noise(n, gauss);
      for (size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / sample_rate;
        double envelope = 0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * spec.mod_rate_hz * t);
        out.samples[i] *= envelope;
      }
      break;
    }
  }

  peak_normalize(out.samples, 0.5);
  return out;
}

std::vector<std::pair<std::string, SyntheticSourceSpec>> default_synthetic_suite(
    double duration_s, uint64_t base_seed) {
  auto make = [&](SynthKind kind, uint64_t offset) {
    SyntheticSourceSpec s;
    s.kind = kind;
    s.duration_s = duration_s;
    s.rng_seed = base_seed + offset;
    return s;
  };

  std::vector<std::pair<std::string, SyntheticSourceSpec>> suite;
  auto band_low = make(SynthKind::bandpass_noise, 1);
  band_low.band_lo_hz = 250.0;
  band_low.band_hi_hz = 900.0;
  suite.emplace_back("band_low", band_low);

  auto band_mid = make(SynthKind::bandpass_noise, 2);
  band_mid.band_lo_hz = 1100.0;
  band_mid.band_hi_hz = 2300.0;
  suite.emplace_back("band_mid", band_mid);

  auto band_high = make(SynthKind::bandpass_noise, 3);
  band_high.band_lo_hz = 3000.0;
  band_high.band_hi_hz = 5200.0;
  suite.emplace_back("band_high", band_high);

  auto tone_low = make(SynthKind::harmonic_tone, 4);
  tone_low.fundamental_hz = 210.0;
  suite.emplace_back("tone_low", tone_low);

  auto tone_high = make(SynthKind::harmonic_tone, 5);
  tone_high.fundamental_hz = 570.0;
  suite.emplace_back("tone_high", tone_high);

  auto am_broad = make(SynthKind::am_noise, 6);
  am_broad.mod_rate_hz = 8.0;
  suite.emplace_back("am_broad", am_broad);

  return suite;
}

EvalReport evaluate(const ConcatDictionary& dict,
                    const std::vector<std::vector<FeatureVector>>& test_per_source,
                    const SolverConfig& solver, int max_window) {
  const auto m = dict.source_count();
  if (static_cast<Eigen::Index>(test_per_source.size()) != m) {
    throw DataError("evaluate: test sources do not match dictionary");
  }
  if (max_window < 1) throw ConfigError("evaluate: max_window must be >= 1");

  EvalReport report;
  report.labels = dict.labels();
  for (auto* measure : {&report.sdr, &report.nnz, &report.sw}) {
    measure->per_source_accuracy = Eigen::VectorXd::Zero(m);
    measure->confusion = Eigen::MatrixXi::Zero(m, m);
  }
  report.masdr_accuracy = Eigen::MatrixXd::Zero(m, max_window);
  report.masdr_min_window.assign(static_cast<size_t>(m), -1);
  report.classified_frames.assign(static_cast<size_t>(m), 0);
  report.silent_frames.assign(static_cast<size_t>(m), 0);

  long correct_frames_sdr = 0, correct_frames_nnz = 0, correct_frames_sw = 0;
  long total_frames = 0;

  for (Eigen::Index s = 0; s < m; ++s) {
    const auto& raw = test_per_source[static_cast<size_t>(s)];

    std::vector<Eigen::VectorXd> normalized;
    normalized.reserve(raw.size());
    for (const auto& f : raw) {
      if (f.bins.size() != dict.meta().features.bins()) {
        throw DataError("evaluate: feature meta mismatch");
      }
      FeatureVector nf = normalize(f);
      if (nf.silent) {
        ++report.silent_frames[static_cast<size_t>(s)];
      } else {
        normalized.push_back(std::move(nf.bins));
      }
    }

    const auto q = static_cast<long>(normalized.size());
    std::vector<FrameScores> scores(static_cast<size_t>(q));
    std::vector<SolveStats> stats(static_cast<size_t>(q));
    parallel_for(q, [&](long i) {
      scores[static_cast<size_t>(i)] = score_frame(normalized[static_cast<size_t>(i)], dict,
                                                   solver, &stats[static_cast<size_t>(i)]);
    });
    for (const auto& st : stats) {
      report.total_solves += st.solves;
      report.solver_failures += st.failures;
      report.frames_with_failure += st.failures > 0;
    }

    long ok_sdr = 0, ok_nnz = 0, ok_sw = 0;
    for (const auto& fs : scores) {
      report.sdr.confusion(s, fs.predicted_sdr) += 1;
      report.nnz.confusion(s, fs.predicted_nnz) += 1;
      report.sw.confusion(s, fs.predicted_sw) += 1;
      ok_sdr += fs.predicted_sdr == s;
      ok_nnz += fs.predicted_nnz == s;
      ok_sw += fs.predicted_sw == s;
    }
    report.classified_frames[static_cast<size_t>(s)] = q;
    total_frames += q;
    correct_frames_sdr += ok_sdr;
    correct_frames_nnz += ok_nnz;
    correct_frames_sw += ok_sw;

    auto pct = [q](long ok) { return q > 0 ? 100.0 * ok / q : 0.0; };
    report.sdr.per_source_accuracy[s] = pct(ok_sdr);
    report.nnz.per_source_accuracy[s] = pct(ok_nnz);
    report.sw.per_source_accuracy[s] = pct(ok_sw);

    // Moving-sum stream accuracy over complete windows of P frames.
    for (int window = 1; window <= max_window; ++window) {
      long windows = q - window + 1;
      if (windows <= 0) {
        report.masdr_accuracy(s, window - 1) = 0.0;
        continue;
      }
      long ok = 0;
      Eigen::VectorXd sum(m);
      for (long last = window - 1; last < q; ++last) {
        sum.setZero();
        for (long j = last - window + 1; j <= last; ++j) sum += scores[static_cast<size_t>(j)].sdr;
        ok += argmax_lowest(sum) == s;
      }
      report.masdr_accuracy(s, window - 1) = 100.0 * ok / windows;
      if (ok == windows && report.masdr_min_window[static_cast<size_t>(s)] < 0) {
        report.masdr_min_window[static_cast<size_t>(s)] = window;
      }
    }
  }

  auto overall = [total_frames, m](MeasureResult& measure, long correct) {
    measure.overall_frame_accuracy = total_frames > 0 ? 100.0 * correct / total_frames : 0.0;
    measure.overall_source_accuracy = measure.per_source_accuracy.sum() / static_cast<double>(m);
  };
  overall(report.sdr, correct_frames_sdr);
  overall(report.nnz, correct_frames_nnz);
  overall(report.sw, correct_frames_sw);
  return report;
}

std::string format_report(const EvalReport& report) {
  const auto m = static_cast<Eigen::Index>(report.labels.size());
  size_t width = 8;
  for (const auto& label : report.labels) width = std::max(width, label.size());

  std::ostringstream out;
  out << "source classification report\n";

  long frames = 0, silent = 0;
  for (size_t i = 0; i < report.labels.size(); ++i) {
    frames += report.classified_frames[i];
    silent += report.silent_frames[i];
  }
  out << "  sources: " << m << ", classified frames: " << frames
      << ", silent frames skipped: " << silent << "\n\n";

  out << "  per-source frame accuracy (%) and smallest moving window with 100% stream accuracy\n";
  out << "  " << std::string(width, ' ') << "  frames      SDR      NNZ       SW    min-P\n";
  for (Eigen::Index s = 0; s < m; ++s) {
    const auto& label = report.labels[static_cast<size_t>(s)];
    out << "  " << label << std::string(width - label.size(), ' ');
    char buf[128];
    std::snprintf(buf, sizeof buf, "  %6ld  %7s  %7s  %7s  %7s\n",
                  report.classified_frames[static_cast<size_t>(s)],
                  fmt(report.sdr.per_source_accuracy[s]).c_str(),
                  fmt(report.nnz.per_source_accuracy[s]).c_str(),
                  fmt(report.sw.per_source_accuracy[s]).c_str(),
                  report.masdr_min_window[static_cast<size_t>(s)] < 0
                      ? "-"
                      : std::to_string(report.masdr_min_window[static_cast<size_t>(s)]).c_str());
    out << buf;
  }

  out << "\n  overall accuracy (%)\n";
  out << "                     SDR      NNZ       SW\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "  frame-weighted %7s  %7s  %7s\n",
                fmt(report.sdr.overall_frame_accuracy).c_str(),
                fmt(report.nnz.overall_frame_accuracy).c_str(),
                fmt(report.sw.overall_frame_accuracy).c_str());
  out << buf;
  std::snprintf(buf, sizeof buf, "  source-average %7s  %7s  %7s\n",
                fmt(report.sdr.overall_source_accuracy).c_str(),
                fmt(report.nnz.overall_source_accuracy).c_str(),
                fmt(report.sw.overall_source_accuracy).c_str());
  out << buf;

  if (report.total_solves > 0) {
    out << "\n  solver: " << report.total_solves << " solves, " << report.solver_failures
        << " did not reach the KKT tolerance\n";
  }
  return out.str();
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["labels"] = report.labels;
  j["sdr"] = measure_to_json(report.sdr);
  j["nnz"] = measure_to_json(report.nnz);
  j["sw"] = measure_to_json(report.sw);

  json curve = json::array();
  for (Eigen::Index r = 0; r < report.masdr_accuracy.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < report.masdr_accuracy.cols(); ++c) {
      row.push_back(report.masdr_accuracy(r, c));
    }
    curve.push_back(std::move(row));
  }
  j["masdr_accuracy"] = std::move(curve);
  j["masdr_min_window"] = report.masdr_min_window;
  j["classified_frames"] = report.classified_frames;
  j["silent_frames"] = report.silent_frames;
  j["solver_failures"] = report.solver_failures;
  j["total_solves"] = report.total_solves;
  j["frames_with_failure"] = report.frames_with_failure;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  json j = json::parse(text);
  EvalReport report;
  report.labels = j.at("labels").get<std::vector<std::string>>();
  report.sdr = measure_from_json(j.at("sdr"));
  report.nnz = measure_from_json(j.at("nnz"));
  report.sw = measure_from_json(j.at("sw"));

  const auto& curve = j.at("masdr_accuracy");
  auto rows = static_cast<Eigen::Index>(curve.size());
  report.masdr_accuracy.resize(rows, rows == 0 ? 0 : static_cast<Eigen::Index>(curve[0].size()));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < report.masdr_accuracy.cols(); ++c) {
      report.masdr_accuracy(r, c) = curve[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
    }
  }
  report.masdr_min_window = j.at("masdr_min_window").get<std::vector<int>>();
  report.classified_frames = j.at("classified_frames").get<std::vector<long>>();
  report.silent_frames = j.at("silent_frames").get<std::vector<long>>();
  report.solver_failures = j.at("solver_failures").get<long>();
  report.total_solves = j.at("total_solves").get<long>();
  report.frames_with_failure = j.at("frames_with_failure").get<long>();
  return report;
}

void write_report_files(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "report.txt", format_report(report));
  write_text_file(dir / "report.json", report_to_json(report));

  std::ostringstream acc;
  acc << "source,frames,silent,sdr_accuracy,nnz_accuracy,sw_accuracy,masdr_min_window\n";
  for (size_t s = 0; s < report.labels.size(); ++s) {
    auto i = static_cast<Eigen::Index>(s);
    acc << report.labels[s] << "," << report.classified_frames[s] << ","
        << report.silent_frames[s] << "," << fmt(report.sdr.per_source_accuracy[i]) << ","
        << fmt(report.nnz.per_source_accuracy[i]) << "," << fmt(report.sw.per_source_accuracy[i])
        << "," << report.masdr_min_window[s] << "\n";
  }
  write_text_file(dir / "accuracy.csv", acc.str());

  std::ostringstream masdr;
  masdr << "source";
  for (Eigen::Index c = 0; c < report.masdr_accuracy.cols(); ++c) masdr << ",P" << (c + 1);
  masdr << "\n";
  for (size_t s = 0; s < report.labels.size(); ++s) {
    masdr << report.labels[s];
    for (Eigen::Index c = 0; c < report.masdr_accuracy.cols(); ++c) {
      masdr << "," << fmt(report.masdr_accuracy(static_cast<Eigen::Index>(s), c));
    }
    masdr << "\n";
  }
  write_text_file(dir / "masdr.csv", masdr.str());

  write_text_file(dir / "confusion_sdr.csv", csv_confusion(report, report.sdr));
  write_text_file(dir / "confusion_nnz.csv", csv_confusion(report, report.nnz));
  write_text_file(dir / "confusion_sw.csv", csv_confusion(report, report.sw));
}

}  // namespace specdict
