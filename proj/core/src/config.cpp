#include "specdict/config.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "specdict/errors.hpp"

namespace specdict {

namespace {

std::string trim(const std::string& s) {
  size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" + value +
                      "'");
  }
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (key == "framing.frame_ms") {
      cfg.framing.frame_ms = parse_double(key, value);
    } else if (key == "framing.hop_ms") {
      cfg.framing.hop_ms = parse_double(key, value);
    } else if (key == "framing.window") {
      if (value == "hann") {
        cfg.framing.window = Window::hann;
      } else if (value == "rect") {
        cfg.framing.window = Window::rect;
      } else {
        throw ConfigError("config key 'framing.window': expected hann or rect");
      }
    } else if (key == "framing.fft_size") {
      if (value == "auto") {
        cfg.framing.fft_size = 0;
      } else {
        long v = parse_long(key, value);
        if (v < 2) throw ConfigError("config key 'framing.fft_size': must be >= 2 or auto");
        cfg.framing.fft_size = static_cast<uint32_t>(v);
      }
    } else if (key == "learning.intra_threshold") {
      cfg.learning.intra_threshold = parse_double(key, value);
    } else if (key == "learning.inter_threshold") {
      cfg.learning.inter_threshold = parse_double(key, value);
    } else if (key == "learning.atoms_per_source") {
      long v = parse_long(key, value);
      if (v < 1) throw ConfigError("config key 'learning.atoms_per_source': must be >= 1");
      cfg.learning.atoms_per_source = static_cast<uint32_t>(v);
    } else if (key == "learning.rng_seed") {
      cfg.learning.rng_seed = parse_u64(key, value);
    } else if (key == "solver.kkt_tol") {
      cfg.solver.kkt_tol = parse_double(key, value);
    } else if (key == "solver.max_iters") {
      cfg.solver.max_iters = static_cast<int>(parse_long(key, value));
    } else if (key == "solver.y_floor") {
      cfg.solver.y_floor = parse_double(key, value);
    } else if (key == "solver.max_active") {
      cfg.solver.max_active = static_cast<int>(parse_long(key, value));
    } else if (key == "stream.window") {
      long v = parse_long(key, value);
      if (v < 1) throw ConfigError("config key 'stream.window': must be >= 1");
      cfg.stream_window = static_cast<int>(v);
    } else if (key == "corpus.test_seconds") {
      cfg.test_seconds = parse_double(key, value);
      if (!(cfg.test_seconds > 0.0)) {
        throw ConfigError("config key 'corpus.test_seconds': must be positive");
      }
    } else if (key == "corpus.split") {
      if (value == "tail_test") {
        cfg.split = SplitMode::tail_test;
      } else if (value == "head_test") {
        cfg.split = SplitMode::head_test;
      } else {
        throw ConfigError("config key 'corpus.split': expected tail_test or head_test");
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  cfg.learning.validate();
  cfg.solver.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path.string());
  return parse_run_config(in);
}

}  // namespace specdict
