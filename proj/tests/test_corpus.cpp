#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/FFT>

#include <fstream>
#include <random>

#include "specdict/audio.hpp"
#include "specdict/corpus.hpp"
#include "specdict/errors.hpp"
#include "support.hpp"

using namespace specdict;

namespace {

// Spectral energy between lo and hi Hz, measured independently with one
// large FFT over the whole signal.
double band_energy_fraction(const AudioSignal& s, double lo, double hi) {
  size_t fft_len = 1;
  while (fft_len < s.samples.size()) fft_len <<= 1;
  std::vector<std::complex<double>> time(fft_len, 0.0);
  for (size_t i = 0; i < s.samples.size(); ++i) time[i] = s.samples[i];
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, time);

  double total = 0.0, in_band = 0.0;
  for (size_t k = 0; k <= fft_len / 2; ++k) {
    double freq = static_cast<double>(k) * s.sample_rate / static_cast<double>(fft_len);
    double e = std::norm(spec[k]);
    total += e;
    if (freq >= lo && freq <= hi) in_band += e;
  }
  return total > 0.0 ? in_band / total : 0.0;
}

AudioSignal ramp_signal(size_t n, uint32_t sr) {
  AudioSignal s;
  s.sample_rate = sr;
  s.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    s.samples[i] = static_cast<double>(i) / static_cast<double>(n) - 0.5;  // aperiodic
  }
  return s;
}

}  // namespace

TEST_CASE("split yields 330 test frames for a 5 s split at defaults") {
  testsupport::TempDir tmp("split");
  SyntheticSourceSpec spec;
  spec.kind = SynthKind::am_noise;
  spec.mod_rate_hz = 4.0;
  spec.duration_s = 8.0;
  spec.rng_seed = 1;
  write_wav_float32(tmp.path() / "s.wav", generate_synthetic(spec, 16000));

  CorpusSpec corpus;
  corpus.sources.push_back({"s", {tmp.path() / "s.wav"}});
  corpus.test_seconds = 5.0;

  SplitCorpus split = split_corpus(corpus, FramingConfig{});
  REQUIRE(split.sources.size() == 1);
  CHECK(split.sources[0].test.size() == 330);
  CHECK(split.sample_rate == 16000);
}

TEST_CASE("head and tail splits carve disjoint sample ranges") {
  testsupport::TempDir tmp("splitpos");
  write_wav_float32(tmp.path() / "ramp.wav", ramp_signal(16000, 8000));  // 2 s
  AudioSignal s = read_wav(tmp.path() / "ramp.wav");  // float-precision samples, as split sees them

  CorpusSpec corpus;
  corpus.sources.push_back({"ramp", {tmp.path() / "ramp.wav"}});
  corpus.test_seconds = 0.5;

  FramingConfig framing;
  const long test_len = 4000;

  corpus.split = SplitMode::tail_test;
  SplitCorpus tail = split_corpus(corpus, framing);

  corpus.split = SplitMode::head_test;
  SplitCorpus head = split_corpus(corpus, framing);

  // frame the corresponding segments directly and compare bitwise
  auto segment_frames = [&](size_t begin, size_t len) {
    AudioSignal seg;
    seg.sample_rate = 8000;
    seg.samples.assign(s.samples.begin() + static_cast<long>(begin),
                       s.samples.begin() + static_cast<long>(begin + len));
    return frame_signal(seg, framing);
  };

  auto expect_tail_train = segment_frames(0, s.samples.size() - test_len);
  auto expect_tail_test = segment_frames(s.samples.size() - test_len, test_len);
  REQUIRE(tail.sources[0].train.size() == expect_tail_train.size());
  REQUIRE(tail.sources[0].test.size() == expect_tail_test.size());
  for (size_t i = 0; i < expect_tail_test.size(); ++i) {
    CHECK(tail.sources[0].test[i].bins == expect_tail_test[i].bins);
  }

  auto expect_head_test = segment_frames(0, test_len);
  for (size_t i = 0; i < expect_head_test.size(); ++i) {
    CHECK(head.sources[0].test[i].bins == expect_head_test[i].bins);
  }
  // ranges are disjoint: head-test frames differ from tail-test frames
  CHECK(head.sources[0].test[0].bins != tail.sources[0].test[0].bins);
}

TEST_CASE("split errors") {
  testsupport::TempDir tmp("spliterr");
  AudioSignal two_seconds = ramp_signal(32000, 16000);
  write_wav_float32(tmp.path() / "a.wav", two_seconds);

  CorpusSpec corpus;
  corpus.sources.push_back({"a", {tmp.path() / "a.wav"}});

  SUBCASE("test split consuming the whole source") {
    corpus.test_seconds = 2.0;
    CHECK_THROWS_AS(static_cast<void>(split_corpus(corpus, FramingConfig{})), DataError);
  }

  SUBCASE("inconsistent sample rates") {
    AudioSignal other = ramp_signal(16000, 8000);
    write_wav_float32(tmp.path() / "b.wav", other);
    corpus.sources.push_back({"b", {tmp.path() / "b.wav"}});
    corpus.test_seconds = 0.5;
    CHECK_THROWS_AS(static_cast<void>(split_corpus(corpus, FramingConfig{})), DataError);
  }

  SUBCASE("missing file") {
    corpus.sources[0].files[0] = tmp.path() / "missing.wav";
    CHECK_THROWS_AS(static_cast<void>(split_corpus(corpus, FramingConfig{})), DataError);
  }
}

TEST_CASE("bandpass noise concentrates its energy in band") {
  SyntheticSourceSpec spec;
  spec.kind = SynthKind::bandpass_noise;
  spec.band_lo_hz = 1000.0;
  spec.band_hi_hz = 2000.0;
  spec.duration_s = 2.0;
  spec.rng_seed = 5;
  AudioSignal s = generate_synthetic(spec, 16000);
  CHECK(band_energy_fraction(s, 900.0, 2100.0) >= 0.95);
}

TEST_CASE("harmonic tone peaks at multiples of the fundamental") {
  SyntheticSourceSpec spec;
  spec.kind = SynthKind::harmonic_tone;
  spec.fundamental_hz = 200.0;
  spec.duration_s = 2.0;
  spec.rng_seed = 6;
  AudioSignal s = generate_synthetic(spec, 16000);

  const size_t window = 8192;
  std::vector<std::complex<double>> time(window);
  for (size_t i = 0; i < window; ++i) time[i] = s.samples[i];
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec_out;
  fft.fwd(spec_out, time);

  for (int h = 1; h <= 8; ++h) {
    auto center = static_cast<long>(std::lround(200.0 * h * window / 16000.0));
    long best = center - 5;
    for (long k = center - 5; k <= center + 5; ++k) {
      if (std::abs(spec_out[static_cast<size_t>(k)]) >
          std::abs(spec_out[static_cast<size_t>(best)])) {
        best = k;
      }
    }
    CHECK(std::abs(best - center) <= 1);
  }
}

TEST_CASE("synthetic generation is deterministic and validates bands") {
  SyntheticSourceSpec spec;
  spec.kind = SynthKind::bandpass_noise;
  spec.band_lo_hz = 500.0;
  spec.band_hi_hz = 1500.0;
  spec.duration_s = 0.5;
  spec.rng_seed = 9;

  AudioSignal a = generate_synthetic(spec, 16000);
  AudioSignal b = generate_synthetic(spec, 16000);
  CHECK(a.samples == b.samples);

  spec.band_hi_hz = 9000.0;  // above the 8 kHz Nyquist
  CHECK_THROWS_WITH_AS(static_cast<void>(generate_synthetic(spec, 16000)),
                       "band outside Nyquist", ConfigError);

  SyntheticSourceSpec tone;
  tone.kind = SynthKind::harmonic_tone;
  tone.fundamental_hz = 1100.0;  // 8th harmonic at 8.8 kHz exceeds Nyquist
  tone.duration_s = 0.5;
  CHECK_THROWS_AS(static_cast<void>(generate_synthetic(tone, 16000)), ConfigError);
}

TEST_CASE("evaluation on a resubstitution corpus is perfect under SDR") {
  std::mt19937_64 rng(33);
  const Eigen::Index p = 12;
  FeatureMeta meta{16000, static_cast<uint32_t>(2 * (p - 1)), 60.0, 15.0};

  LearnConfig lc;
  lc.atoms_per_source = 6;
  lc.intra_threshold = 1.0;
  lc.inter_threshold = 1.0;

  std::vector<SourceDictionary> dicts;
  std::vector<std::vector<FeatureVector>> test_sets;
  for (int s = 0; s < 2; ++s) {
    auto features = testsupport::to_features(testsupport::random_dictionary(p, 10, rng));
    dicts.push_back(learn_dictionary(features, dicts, lc, "s" + std::to_string(s), meta));
    test_sets.push_back(testsupport::to_features(dicts.back().atoms));  // atoms as test frames
  }
  ConcatDictionary dict = concat(dicts);

  EvalReport report = evaluate(dict, test_sets, SolverConfig{}, 4);
  CHECK(report.sdr.overall_frame_accuracy == 100.0);
  CHECK(report.sdr.per_source_accuracy.minCoeff() == 100.0);
  CHECK(report.masdr_min_window == std::vector<int>{1, 1});

  SUBCASE("confusion rows sum to classified frame counts") {
    for (Eigen::Index s = 0; s < 2; ++s) {
      CHECK(report.sdr.confusion.row(s).sum() == report.classified_frames[static_cast<size_t>(s)]);
      CHECK(report.nnz.confusion.row(s).sum() == report.classified_frames[static_cast<size_t>(s)]);
      CHECK(report.sw.confusion.row(s).sum() == report.classified_frames[static_cast<size_t>(s)]);
    }
  }

  SUBCASE("json round trip is lossless") {
    std::string text = report_to_json(report);
    EvalReport back = report_from_json(text);
    CHECK(back.labels == report.labels);
    CHECK(back.sdr.per_source_accuracy == report.sdr.per_source_accuracy);
    CHECK(back.sdr.overall_frame_accuracy == report.sdr.overall_frame_accuracy);
    CHECK(back.sdr.confusion == report.sdr.confusion);
    CHECK(back.nnz.confusion == report.nnz.confusion);
    CHECK(back.sw.confusion == report.sw.confusion);
    CHECK(back.masdr_accuracy == report.masdr_accuracy);
    CHECK(back.masdr_min_window == report.masdr_min_window);
    CHECK(back.classified_frames == report.classified_frames);
    CHECK(back.silent_frames == report.silent_frames);
    CHECK(back.total_solves == report.total_solves);
    CHECK(report_to_json(back) == text);
  }

  SUBCASE("report files are written") {
    testsupport::TempDir tmp("report");
    write_report_files(report, tmp.path());
    for (const char* name : {"report.txt", "report.json", "accuracy.csv", "masdr.csv",
                             "confusion_sdr.csv", "confusion_nnz.csv", "confusion_sw.csv"}) {
      CHECK(std::filesystem::exists(tmp.path() / name));
    }
  }
}

TEST_CASE("single-source corpus is trivially perfect on all measures") {
  std::mt19937_64 rng(35);
  const Eigen::Index p = 10;
  FeatureMeta meta{16000, static_cast<uint32_t>(2 * (p - 1)), 60.0, 15.0};
  LearnConfig lc;
  lc.atoms_per_source = 5;

  auto features = testsupport::to_features(testsupport::random_dictionary(p, 12, rng));
  std::vector<SourceDictionary> dicts;
  dicts.push_back(learn_dictionary(features, dicts, lc, "only", meta));
  ConcatDictionary dict = concat(dicts);

  std::vector<std::vector<FeatureVector>> tests{
      testsupport::to_features(testsupport::random_dictionary(p, 8, rng))};
  EvalReport report = evaluate(dict, tests, SolverConfig{}, 3);
  CHECK(report.sdr.overall_frame_accuracy == 100.0);
  CHECK(report.nnz.overall_frame_accuracy == 100.0);
  CHECK(report.sw.overall_frame_accuracy == 100.0);
}

TEST_CASE("silent frames are skipped and counted") {
  std::mt19937_64 rng(37);
  const Eigen::Index p = 10;
  FeatureMeta meta{16000, static_cast<uint32_t>(2 * (p - 1)), 60.0, 15.0};
  LearnConfig lc;
  lc.atoms_per_source = 4;
  auto features = testsupport::to_features(testsupport::random_dictionary(p, 8, rng));
  std::vector<SourceDictionary> dicts;
  dicts.push_back(learn_dictionary(features, dicts, lc, "only", meta));
  ConcatDictionary dict = concat(dicts);

  std::vector<std::vector<FeatureVector>> tests(1);
  tests[0].push_back({dict.sources[0].atoms.col(0), false});
  tests[0].push_back({Eigen::VectorXd::Zero(p), false});  // silent
  EvalReport report = evaluate(dict, tests, SolverConfig{}, 2);
  CHECK(report.classified_frames[0] == 1);
  CHECK(report.silent_frames[0] == 1);
}

TEST_CASE("default synthetic suite has six distinct sources") {
  auto suite = default_synthetic_suite(1.0, 42);
  REQUIRE(suite.size() == 6);
  int bands = 0, tones = 0, am = 0;
  for (const auto& [label, spec] : suite) {
    switch (spec.kind) {
      case SynthKind::bandpass_noise: ++bands; break;
      case SynthKind::harmonic_tone: ++tones; break;
      case SynthKind::am_noise: ++am; break;
    }
  }
  CHECK(bands == 3);
  CHECK(tones == 2);
  CHECK(am == 1);
}
