#pragma once

// Flat key=value run configuration with CLI-flag overrides.
// Precedence: flag > file > default.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "conceptflow/errors.hpp"

namespace conceptflow {

struct RunConfig {
  // Paths.
  std::string triples;
  std::string conversations;
  std::string embeddings;        // prefix for saved/loaded pretrained embeddings
  std::string checkpoint;        // main-stage model
  std::string select_checkpoint; // select-stage model
  std::string pruned_graphs;     // per-example kept V2 ids
  std::string output;            // command-specific artifact (json report, records)

  // Dimensions.
  int word_dim = 32;
  int concept_dim = 32;
  int hidden = 32;
  int select_hidden = 16;
  int layers = 2;

  // Training.
  double lr = 0.0001;
  int epochs = 20;
  uint64_t seed = 17;
  double init_scale = 0.1;

  // Embedding pretraining.
  int transe_epochs = 50;
  double transe_lr = 0.05;
  double transe_margin = 1.0;

  // Two-hop selection.
  int k_top = 10;
  double select_fraction = 0.1;
  bool reuse_select = false;

  // Decoding.
  std::string decode_mode = "greedy";
  int max_len = 20;
  int sample_k = 5;
  bool trace = false;

  // Graph statistics and encoding.
  int max_depth = 3;
  double pagerank_lambda = 0.5;

  int workers = 1;
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config: " + key + " expects a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    if constexpr (std::is_same_v<T, double>) {
      double out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } else if constexpr (std::is_same_v<T, uint64_t>) {
      unsigned long long out = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return static_cast<uint64_t>(out);
    } else {
      long out = std::stol(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return static_cast<T>(out);
    }
  } catch (const std::exception&) {
    throw UsageError("config: " + key + " expects a number, got '" + v + "'");
  }
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_number;
  if (key == "triples") cfg.triples = value;
  else if (key == "conversations") cfg.conversations = value;
  else if (key == "embeddings") cfg.embeddings = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "select_checkpoint") cfg.select_checkpoint = value;
  else if (key == "pruned_graphs") cfg.pruned_graphs = value;
  else if (key == "output") cfg.output = value;
  else if (key == "word_dim") cfg.word_dim = parse_number<int>(value, key);
  else if (key == "concept_dim") cfg.concept_dim = parse_number<int>(value, key);
  else if (key == "hidden") cfg.hidden = parse_number<int>(value, key);
  else if (key == "select_hidden") cfg.select_hidden = parse_number<int>(value, key);
  else if (key == "layers") cfg.layers = parse_number<int>(value, key);
  else if (key == "lr") cfg.lr = parse_number<double>(value, key);
  else if (key == "epochs") cfg.epochs = parse_number<int>(value, key);
  else if (key == "seed") cfg.seed = parse_number<uint64_t>(value, key);
  else if (key == "init_scale") cfg.init_scale = parse_number<double>(value, key);
  else if (key == "transe_epochs") cfg.transe_epochs = parse_number<int>(value, key);
  else if (key == "transe_lr") cfg.transe_lr = parse_number<double>(value, key);
  else if (key == "transe_margin") cfg.transe_margin = parse_number<double>(value, key);
  else if (key == "k_top") cfg.k_top = parse_number<int>(value, key);
  else if (key == "select_fraction") cfg.select_fraction = parse_number<double>(value, key);
  else if (key == "reuse_select") cfg.reuse_select = parse_bool(value, key);
  else if (key == "decode_mode") cfg.decode_mode = value;
  else if (key == "max_len") cfg.max_len = parse_number<int>(value, key);
  else if (key == "sample_k") cfg.sample_k = parse_number<int>(value, key);
  else if (key == "trace") cfg.trace = parse_bool(value, key);
  else if (key == "max_depth") cfg.max_depth = parse_number<int>(value, key);
  else if (key == "pagerank_lambda") cfg.pagerank_lambda = parse_number<double>(value, key);
  else if (key == "workers") cfg.workers = parse_number<int>(value, key);
  else throw UsageError("config: unknown key '" + key + "'");
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path, line_no, "expected key=value");
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(path, line_no, "empty key");
    apply_config_entry(cfg, key, value);
  }
}

inline void validate_config(const RunConfig& cfg) {
  if (cfg.word_dim < 1 || cfg.concept_dim < 1 || cfg.hidden < 1 || cfg.select_hidden < 1)
    throw UsageError("config: dimensions must be >= 1");
  if (cfg.layers < 1) throw UsageError("config: layers must be >= 1");
  if (cfg.lr <= 0.0 || cfg.transe_lr <= 0.0) throw UsageError("config: learning rates must be positive");
  if (cfg.epochs < 0 || cfg.transe_epochs < 0) throw UsageError("config: epochs must be >= 0");
  if (cfg.transe_margin <= 0.0) throw UsageError("config: transe_margin must be positive");
  if (cfg.k_top < 0) throw UsageError("config: k_top must be >= 0");
  if (cfg.select_fraction <= 0.0 || cfg.select_fraction > 1.0)
    throw UsageError("config: select_fraction must be in (0, 1]");
  if (cfg.decode_mode != "greedy" && cfg.decode_mode != "top_k")
    throw UsageError("config: decode_mode must be 'greedy' or 'top_k'");
  if (cfg.max_len < 1) throw UsageError("config: max_len must be >= 1");
  if (cfg.sample_k < 1) throw UsageError("config: sample_k must be >= 1");
  if (cfg.max_depth < 0) throw UsageError("config: max_depth must be >= 0");
  if (cfg.pagerank_lambda < 0.0 || cfg.pagerank_lambda > 1.0)
    throw UsageError("config: pagerank_lambda must be in [0, 1]");
  if (cfg.workers < 1) throw UsageError("config: workers must be >= 1");
}

}  // namespace conceptflow
