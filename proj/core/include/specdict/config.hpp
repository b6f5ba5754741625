#pragma once

#include <filesystem>
#include <istream>

#include "specdict/corpus.hpp"
#include "specdict/dictionary.hpp"
#include "specdict/features.hpp"
#include "specdict/solver.hpp"

namespace specdict {

struct RunConfig {
  FramingConfig framing;
  LearnConfig learning;
  SolverConfig solver;
  int stream_window = 6;      // P for the moving SDR sum
  double test_seconds = 5.0;  // evaluation split
  SplitMode split = SplitMode::tail_test;
};

// Flat key=value configuration, '#' starts a comment. Keys use section
// prefixes, e.g. framing.frame_ms=60. Unknown keys and malformed values
// throw ConfigError.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace specdict
