#include <benchmark/benchmark.h>

#include "specdict/classify.hpp"
#include "specdict/corpus.hpp"
#include "specdict/dictionary.hpp"
#include "specdict/features.hpp"

using namespace specdict;

namespace {

AudioSignal noise_signal(double seconds) {
  SyntheticSourceSpec spec;
  spec.kind = SynthKind::am_noise;
  spec.mod_rate_hz = 5.0;
  spec.duration_s = seconds;
  spec.rng_seed = 3;
  return generate_synthetic(spec, 16000);
}

ConcatDictionary small_dictionary() {
  FramingConfig framing;
  FeatureMeta meta{16000, framing.resolved_fft_size(16000), framing.frame_ms, framing.hop_ms};
  LearnConfig cfg;
  cfg.atoms_per_source = 40;
  std::vector<SourceDictionary> dicts;
  auto suite = default_synthetic_suite(15.0, 77);
  for (auto& [label, spec] : suite) {
    auto features = normalized_nonsilent(frame_signal(generate_synthetic(spec, 16000), framing));
    dicts.push_back(learn_dictionary(features, dicts, cfg, label, meta));
  }
  return concat(std::move(dicts));
}

}  // namespace

static void BM_FrameSignal(benchmark::State& state) {
  AudioSignal s = noise_signal(10.0);
  FramingConfig cfg;
  for (auto _ : state) {
    auto frames = frame_signal(s, cfg);
    benchmark::DoNotOptimize(frames);
  }
}
BENCHMARK(BM_FrameSignal)->Unit(benchmark::kMillisecond);

static void BM_LearnDictionary(benchmark::State& state) {
  FramingConfig framing;
  FeatureMeta meta{16000, framing.resolved_fft_size(16000), framing.frame_ms, framing.hop_ms};
  auto features = normalized_nonsilent(frame_signal(noise_signal(15.0), framing));
  LearnConfig cfg;
  cfg.atoms_per_source = static_cast<uint32_t>(state.range(0));
  for (auto _ : state) {
    SourceDictionary d = learn_dictionary(features, {}, cfg, "bench", meta);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_LearnDictionary)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_ScoreFrame(benchmark::State& state) {
  ConcatDictionary dict = small_dictionary();
  FramingConfig framing;
  auto frames = normalized_nonsilent(frame_signal(noise_signal(1.0), framing));
  SolverConfig solver;
  size_t i = 0;
  for (auto _ : state) {
    FrameScores scores = score_frame(frames[i % frames.size()].bins, dict, solver);
    benchmark::DoNotOptimize(scores);
    ++i;
  }
}
BENCHMARK(BM_ScoreFrame)->Unit(benchmark::kMillisecond);

static void BM_CascadePredict(benchmark::State& state) {
  ConcatDictionary dict = small_dictionary();
  FramingConfig framing;
  auto frames = normalized_nonsilent(frame_signal(noise_signal(1.0), framing));
  SolverConfig solver;
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cascade_predict(frames[i % frames.size()].bins, dict, solver));
    ++i;
  }
}
BENCHMARK(BM_CascadePredict)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
