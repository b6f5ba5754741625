#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "specdict/audio.hpp"
#include "specdict/classify.hpp"
#include "specdict/config.hpp"
#include "specdict/corpus.hpp"
#include "specdict/dictionary.hpp"
#include "specdict/errors.hpp"
#include "specdict/features.hpp"
#include "specdict/parallel.hpp"
#include "specdict/solver.hpp"

namespace fs = std::filesystem;
using namespace specdict;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// More than this fraction of frames with failed solves is a numerical failure.
constexpr double kFailureBudget = 0.01;

struct SourceArgs {
  std::vector<std::string> specs;  // label=path[,path...]
  std::string manifest;            // file with one spec per line
};

std::vector<CorpusSource> resolve_sources(const SourceArgs& args) {
  std::vector<CorpusSource> sources;

  auto parse_spec = [&sources](const std::string& spec, const fs::path& base) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size()) {
      throw ConfigError("source spec '" + spec + "' is not label=path[,path...]");
    }
    CorpusSource src;
    src.label = spec.substr(0, eq);
    std::string paths = spec.substr(eq + 1);
    size_t start = 0;
    while (start <= paths.size()) {
      size_t comma = paths.find(',', start);
      std::string one =
          comma == std::string::npos ? paths.substr(start) : paths.substr(start, comma - start);
      if (!one.empty()) {
        fs::path p(one);
        src.files.push_back(p.is_absolute() || base.empty() ? p : base / p);
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (src.files.empty()) throw ConfigError("source spec '" + spec + "' lists no files");
    sources.push_back(std::move(src));
  };

  if (!args.manifest.empty()) {
    std::ifstream in(args.manifest);
    if (!in) throw DataError("cannot open corpus manifest: " + args.manifest);
    fs::path base = fs::path(args.manifest).parent_path();
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      size_t begin = line.find_first_not_of(" \t");
      if (begin == std::string::npos) continue;
      parse_spec(line.substr(begin), base);
    }
  }
  for (const auto& spec : args.specs) parse_spec(spec, fs::path());

  if (sources.empty()) throw ConfigError("no sources given (positional label=path or --corpus)");
  return sources;
}

RunConfig load_config(const std::string& path, std::optional<uint64_t> seed) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  if (seed) cfg.learning.rng_seed = *seed;
  return cfg;
}

struct TrainedSource {
  std::string label;
  std::vector<FeatureVector> features;  // normalized, non-silent
};

// Reads and frames every source; enforces one sample rate across the corpus.
std::pair<std::vector<TrainedSource>, uint32_t> load_training_features(
    const std::vector<CorpusSource>& sources, const FramingConfig& framing) {
  std::vector<TrainedSource> out;
  uint32_t sample_rate = 0;
  for (const auto& source : sources) {
    std::vector<double> samples;
    for (const auto& file : source.files) {
      AudioSignal sig = read_wav(file);
      if (sample_rate == 0) sample_rate = sig.sample_rate;
      if (sig.sample_rate != sample_rate) {
        throw DataError(file.string() + ": sample rate mismatch within corpus");
      }
      samples.insert(samples.end(), sig.samples.begin(), sig.samples.end());
    }
    AudioSignal joined{std::move(samples), sample_rate};
    TrainedSource ts;
    ts.label = source.label;
    ts.features = normalized_nonsilent(frame_signal(joined, framing));
    if (ts.features.empty()) {
      throw DataError("source '" + source.label + "' has no non-silent frames");
    }
    out.push_back(std::move(ts));
  }
  return {std::move(out), sample_rate};
}

std::vector<SourceDictionary> train_dictionaries(
    const std::vector<std::pair<std::string, std::vector<FeatureVector>>>& per_source,
    const LearnConfig& learning, const FeatureMeta& meta, bool verbose) {
  std::vector<SourceDictionary> dicts;
  for (const auto& [label, features] : per_source) {
    SourceDictionary d = learn_dictionary(features, dicts, learning, label, meta);
    if (verbose) {
      auto appended = d.atoms.cols() - d.accepted;
      std::cout << "  " << label << ": " << d.atoms.cols() << " atoms (" << d.accepted
                << " threshold-accepted";
      if (appended > 0) std::cout << ", " << appended << " appended by fallback";
      std::cout << ")\n";
    }
    dicts.push_back(std::move(d));
  }
  return dicts;
}

FeatureMeta make_meta(uint32_t sample_rate, const FramingConfig& framing) {
  return FeatureMeta{sample_rate, framing.resolved_fft_size(sample_rate), framing.frame_ms,
                     framing.hop_ms};
}

int cmd_train(const std::string& config_path, std::optional<uint64_t> seed,
              const SourceArgs& source_args, const std::string& out_path) {
  RunConfig cfg = load_config(config_path, seed);
  auto sources = resolve_sources(source_args);
  auto [loaded, sample_rate] = load_training_features(sources, cfg.framing);

  std::vector<std::pair<std::string, std::vector<FeatureVector>>> per_source;
  per_source.reserve(loaded.size());
  for (auto& ts : loaded) per_source.emplace_back(std::move(ts.label), std::move(ts.features));

  std::cout << "training " << per_source.size() << " source dictionaries ("
            << cfg.learning.atoms_per_source << " atoms each)\n";
  auto dicts =
      train_dictionaries(per_source, cfg.learning, make_meta(sample_rate, cfg.framing), true);
  ConcatDictionary dict = concat(std::move(dicts));
  save_dictionary(out_path, dict);
  std::cout << "wrote " << dict.total_atoms() << " atoms to " << out_path << "\n";
  return 0;
}

int cmd_classify(const std::string& dict_path, const std::string& wav_path,
                 const std::string& measure, std::optional<int> window,
                 const std::string& config_path) {
  RunConfig cfg = load_config(config_path, std::nullopt);
  if (window) cfg.stream_window = *window;
  if (cfg.stream_window < 1) throw ConfigError("--window must be >= 1");

  ConcatDictionary dict = load_dictionary(dict_path);
  AudioSignal wav = read_wav(wav_path);
  if (wav.sample_rate != dict.meta().features.sample_rate) {
    throw DataError("sample rate mismatch: dictionary expects " +
                    std::to_string(dict.meta().features.sample_rate) + " Hz, input is " +
                    std::to_string(wav.sample_rate) + " Hz");
  }

  FramingConfig framing = cfg.framing;
  framing.frame_ms = dict.meta().features.frame_ms;
  framing.hop_ms = dict.meta().features.hop_ms;
  framing.fft_size = dict.meta().features.fft_size;

  auto frames = frame_signal(wav, framing);
  const auto n = static_cast<long>(frames.size());
  const double hop_s = framing.hop_ms / 1000.0;
  const auto labels = dict.labels();

  const bool need_concat = measure != "sdr";

  struct FrameResult {
    bool silent = false;
    Eigen::VectorXd sdr;
    Eigen::Index label = -1;
    bool failed = false;
  };
  std::vector<FrameResult> results(static_cast<size_t>(n));

  parallel_for(n, [&](long i) {
    FrameResult& r = results[static_cast<size_t>(i)];
    FeatureVector nf = normalize(frames[static_cast<size_t>(i)]);
    if (nf.silent) {
      r.silent = true;
      return;
    }
    SolveStats stats;
    r.sdr = score_frame_sdr(nf.bins, dict, cfg.solver, &stats);
    if (!need_concat) {
      r.label = argmax_lowest(r.sdr);
    } else {
      ConcatScores scores = score_frame_concat(nf.bins, dict, cfg.solver, &stats);
      if (measure == "nnz") {
        r.label = argmax_lowest(scores.nnz.cast<double>());
      } else if (measure == "sw") {
        r.label = argmax_lowest(scores.sw);
      } else {  // cascade: top sources by weight sum, best SDR among them
        std::vector<Eigen::Index> order(static_cast<size_t>(dict.source_count()));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&scores](Eigen::Index a, Eigen::Index b) {
          return scores.sw[a] > scores.sw[b];
        });
        auto keep = std::min<Eigen::Index>(dict.source_count(), 3);
        r.label = order[0];
        for (Eigen::Index k = 1; k < keep; ++k) {
          if (r.sdr[order[static_cast<size_t>(k)]] > r.sdr[r.label]) {
            r.label = order[static_cast<size_t>(k)];
          }
        }
      }
    }
    r.failed = stats.failures > 0;
  });

  StreamState stream(dict.source_count(), cfg.stream_window);
  long failed_frames = 0, classified = 0;
  std::cout << "frame,time_s,label,masdr\n";
  for (long i = 0; i < n; ++i) {
    const FrameResult& r = results[static_cast<size_t>(i)];
    char time_buf[32];
    std::snprintf(time_buf, sizeof time_buf, "%.3f", static_cast<double>(i) * hop_s);
    if (r.silent) {
      std::cout << i << "," << time_buf << ",unclassifiable,"
                << (stream.frames() > 0 ? labels[static_cast<size_t>(stream.predicted())] : "none")
                << "\n";
      continue;
    }
    stream.add_frame(r.sdr);
    ++classified;
    failed_frames += r.failed;
    std::cout << i << "," << time_buf << "," << labels[static_cast<size_t>(r.label)] << ","
              << labels[static_cast<size_t>(stream.predicted())] << "\n";
  }
  std::cout << "verdict,"
            << (stream.frames() > 0 ? labels[static_cast<size_t>(stream.predicted())] : "none")
            << "\n";

  if (classified > 0 && failed_frames > kFailureBudget * classified) {
    std::cerr << "solver failed to converge on " << failed_frames << " of " << classified
              << " frames\n";
    return kExitNumeric;
  }
  return 0;
}

void append_sweep_row(std::string& csv, const LearnConfig& lc, const EvalReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.2f,%.2f\n", lc.intra_threshold,
                lc.inter_threshold, report.sdr.overall_frame_accuracy,
                report.nnz.overall_frame_accuracy, report.sw.overall_frame_accuracy);
  csv += buf;
}

int cmd_eval(const std::string& config_path, std::optional<uint64_t> seed,
             const SourceArgs& source_args, const std::string& out_dir, bool sweep) {
  RunConfig cfg = load_config(config_path, seed);
  auto sources = resolve_sources(source_args);

  CorpusSpec spec{sources, cfg.test_seconds, cfg.split};
  SplitCorpus split = split_corpus(spec, cfg.framing);
  FeatureMeta meta = make_meta(split.sample_rate, cfg.framing);

  std::vector<std::pair<std::string, std::vector<FeatureVector>>> train_features;
  std::vector<std::vector<FeatureVector>> test_features;
  for (auto& sf : split.sources) {
    auto train = normalized_nonsilent(sf.train);
    if (train.empty()) throw DataError("source '" + sf.label + "' has no non-silent frames");
    train_features.emplace_back(sf.label, std::move(train));
    test_features.push_back(std::move(sf.test));
  }

  fs::create_directories(out_dir);
  auto run_once = [&](const LearnConfig& lc, const fs::path& dir, bool verbose) {
    auto dicts = train_dictionaries(train_features, lc, meta, verbose);
    ConcatDictionary dict = concat(std::move(dicts));
    EvalReport report = evaluate(dict, test_features, cfg.solver);
    write_report_files(report, dir);
    return report;
  };

  long frames_with_failure = 0, classified = 0;
  if (sweep) {
    std::string csv = "intra_threshold,inter_threshold,sdr_accuracy,nnz_accuracy,sw_accuracy\n";
    for (auto [intra, inter] : {std::pair{0.95, 0.95}, {0.95, 1.0}, {1.0, 0.95}, {1.0, 1.0}}) {
      LearnConfig lc = cfg.learning;
      lc.intra_threshold = intra;
      lc.inter_threshold = inter;
      char name[64];
      std::snprintf(name, sizeof name, "Ti_%.2f__TI_%.2f", intra, inter);
      std::cout << "sweep point " << name << "\n";
      EvalReport report = run_once(lc, fs::path(out_dir) / name, false);
      append_sweep_row(csv, lc, report);
      frames_with_failure += report.frames_with_failure;
      for (long f : report.classified_frames) classified += f;
    }
    std::ofstream out(fs::path(out_dir) / "sweep.csv", std::ios::binary | std::ios::trunc);
    out << csv;
    std::cout << "\n" << csv;
  } else {
    EvalReport report = run_once(cfg.learning, out_dir, true);
    std::cout << "\n" << format_report(report);
    frames_with_failure = report.frames_with_failure;
    for (long f : report.classified_frames) classified += f;
  }
  std::cout << "reports written to " << out_dir << "\n";

  if (classified > 0 && frames_with_failure > kFailureBudget * classified) {
    std::cerr << "solver failed to converge on " << frames_with_failure << " of " << classified
              << " frames\n";
    return kExitNumeric;
  }
  return 0;
}

int cmd_synth(const std::string& out_dir, uint64_t seed, double seconds, uint32_t sample_rate) {
  fs::create_directories(out_dir);
  auto suite = default_synthetic_suite(seconds, seed);
  std::string manifest;
  for (const auto& [label, spec] : suite) {
    AudioSignal sig = generate_synthetic(spec, sample_rate);
    std::string filename = label + ".wav";
    write_wav_float32(fs::path(out_dir) / filename, sig);
    manifest += label + "=" + filename + "\n";
    std::cout << "  " << filename << ": " << sig.duration_s() << " s\n";
  }
  std::ofstream out(fs::path(out_dir) / "corpus.txt", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest in " + out_dir);
  out << manifest;
  std::cout << "manifest written to " << (fs::path(out_dir) / "corpus.txt").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-dictionary audio source classification"};
  app.require_subcommand(1);

  std::string config_path, out_path, dict_path, wav_path, measure = "sdr", manifest;
  std::optional<uint64_t> seed;
  std::optional<int> window;
  bool sweep = false;
  std::vector<std::string> source_specs;
  uint64_t synth_seed = 1;
  double synth_seconds = 65.0;
  uint32_t synth_rate = 16000;

  auto* train = app.add_subcommand("train", "Learn source dictionaries from labeled audio");
  train->add_option("--config", config_path, "key=value configuration file");
  train->add_option("--out", out_path, "output dictionary file")->required();
  train->add_option("--seed", seed, "override learning.rng_seed");
  train->add_option("--corpus", manifest, "manifest file with label=path lines");
  train->add_option("sources", source_specs, "label=path[,path...]");

  auto* classify = app.add_subcommand("classify", "Classify a WAV stream frame by frame");
  classify->add_option("--dict", dict_path, "dictionary file from train")->required();
  classify->add_option("--config", config_path, "key=value configuration file");
  classify->add_option("--measure", measure, "sdr, nnz, sw, or cascade")
      ->check(CLI::IsMember({"sdr", "nnz", "sw", "cascade"}));
  classify->add_option("--window", window, "moving-sum window P");
  classify->add_option("wav", wav_path, "input WAV file")->required();

  auto* eval = app.add_subcommand("eval", "Split, train, and score a labeled corpus");
  eval->add_option("--config", config_path, "key=value configuration file");
  eval->add_option("--out", out_path, "report output directory")->required();
  eval->add_option("--seed", seed, "override learning.rng_seed");
  eval->add_option("--corpus", manifest, "manifest file with label=path lines");
  eval->add_flag("--sweep", sweep, "evaluate all four (0.95, 1.00) threshold pairs");
  eval->add_option("sources", source_specs, "label=path[,path...]");

  auto* synth = app.add_subcommand("synth", "Generate the six-source synthetic corpus");
  synth->add_option("--out", out_path, "output directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--seconds", synth_seconds, "duration per source");
  synth->add_option("--sr", synth_rate, "sample rate in Hz");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    SourceArgs source_args{source_specs, manifest};
    if (train->parsed()) return cmd_train(config_path, seed, source_args, out_path);
    if (classify->parsed()) return cmd_classify(dict_path, wav_path, measure, window, config_path);
    if (eval->parsed()) return cmd_eval(config_path, seed, source_args, out_path, sweep);
    if (synth->parsed()) return cmd_synth(out_path, synth_seed, synth_seconds, synth_rate);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
