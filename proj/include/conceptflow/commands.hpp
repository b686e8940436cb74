#pragma once

// CLI command implementations. The binary in tools/ is a thin argv wrapper
// around these.

#include <iomanip>
#include <iostream>
#include <sstream>

#include "conceptflow/pipeline.hpp"

namespace conceptflow {

inline std::string format_stats_table(const HopStats& stats) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "depth" << std::setw(12) << "amount" << std::setw(12)
      << "ratio" << std::setw(12) << "number" << "\n";
  out << std::fixed << std::setprecision(4);
  for (const HopStats::Row& row : stats.rows) {
    std::string label = row.depth == 0 ? "zero-hop" : "+" + std::to_string(row.depth) + "-hop";
    out << std::left << std::setw(12) << label << std::setw(12) << row.mean_amount
        << std::setw(12) << row.coverage_ratio << std::setw(12) << row.coverage_count << "\n";
  }
  return out.str();
}

inline nlohmann::json stats_to_json(const HopStats& stats) {
  nlohmann::json rows = nlohmann::json::array();
  for (const HopStats::Row& row : stats.rows)
    rows.push_back({{"depth", row.depth},
                    {"amount", row.mean_amount},
                    {"ratio", row.coverage_ratio},
                    {"number", row.coverage_count}});
  return {{"examples", stats.example_count}, {"rows", rows}};
}

// Per-depth concept graph size and golden coverage over the corpus.
inline HopStats cmd_stats(const RunConfig& cfg, std::ostream& out) {
  if (cfg.triples.empty() || cfg.conversations.empty())
    throw UsageError("stats needs 'triples' and 'conversations' paths");
  KnowledgeGraph kg = load_triples(cfg.triples);
  std::vector<ConversationExample> examples = load_conversations(cfg.conversations, kg);
  if (examples.empty()) throw DataError("conversation corpus is empty: " + cfg.conversations);

  HopStats stats = hop_statistics(examples, kg, cfg.max_depth);
  out << "examples: " << stats.example_count << "\n" << format_stats_table(stats);
  if (!cfg.output.empty()) {
    std::ofstream json_out(cfg.output);
    if (!json_out) throw DataError("cannot write " + cfg.output);
    json_out << stats_to_json(stats).dump(2) << "\n";
  }
  return stats;
}

enum class TrainStage { main, select };

// Train (or resume) a stage and save its checkpoint. The main stage consumes
// the pruned-graph file when one is configured.
inline TrainLog cmd_train(const RunConfig& cfg, TrainStage stage, std::ostream& out) {
  Corpus corpus = load_corpus(cfg);
  std::string checkpoint_path =
      stage == TrainStage::select ? cfg.select_checkpoint : cfg.checkpoint;
  if (checkpoint_path.empty())
    throw UsageError(stage == TrainStage::select ? "train: 'select_checkpoint' path is required"
                                                 : "train: 'checkpoint' path is required");

  if (stage == TrainStage::main && !cfg.pruned_graphs.empty()) {
    if (!std::filesystem::exists(cfg.pruned_graphs))
      throw DataError("pruning enabled but pruned-graph file is missing: " + cfg.pruned_graphs);
    apply_pruning(corpus, cfg.pruned_graphs);
    out << "applied pruned graphs from " << cfg.pruned_graphs << "\n";
  }

  int hidden_override = stage == TrainStage::select ? cfg.select_hidden : -1;
  ModelParams params = build_model(cfg, corpus, hidden_override, &out);
  uint64_t start_step = 0;
  if (std::filesystem::exists(checkpoint_path)) {
    start_step = load_checkpoint(checkpoint_path, params);
    out << "resuming from " << checkpoint_path << " at step " << start_step << "\n";
  }

  std::vector<size_t> subset;
  const std::vector<size_t>* subset_ptr = nullptr;
  if (stage == TrainStage::select) {
    subset = select_training_subset(corpus.examples.size(), cfg.select_fraction, cfg.seed);
    subset_ptr = &subset;
    out << "select stage: training on " << subset.size() << " of " << corpus.examples.size()
        << " examples\n";
  }

  TrainLog log = train_model(params, corpus, cfg.lr, cfg.epochs, cfg.seed, subset_ptr, &out,
                             cfg.pagerank_lambda);
  save_checkpoint(checkpoint_path, params, start_step + log.steps);
  out << "saved checkpoint to " << checkpoint_path << " (" << (start_step + log.steps)
      << " steps";
  if (log.word_fallbacks > 0)
    out << ", " << log.word_fallbacks << " concept targets fell back to the word class";
  out << ")\n";
  return log;
}

// Select stage: train (or reuse) the small model, score every example's
// two-hop candidates, keep the top K and write the pruned-graph file.
inline SelectStageResult cmd_select(const RunConfig& cfg, std::ostream& out) {
  if (cfg.pruned_graphs.empty()) throw UsageError("select: 'pruned_graphs' path is required");
  Corpus corpus = load_corpus(cfg);
  ModelParams select_params = build_model(cfg, corpus, cfg.select_hidden, &out);

  bool already_trained = false;
  if (cfg.reuse_select) {
    if (cfg.select_checkpoint.empty() || !std::filesystem::exists(cfg.select_checkpoint))
      throw DataError("select model untrained: no checkpoint at '" + cfg.select_checkpoint + "'");
    load_checkpoint(cfg.select_checkpoint, select_params);
    already_trained = true;
    out << "reusing select model from " << cfg.select_checkpoint << "\n";
  }

  SelectStageResult result = run_select_stage(cfg, corpus, select_params, already_trained, &out);
  if (!already_trained && !cfg.select_checkpoint.empty()) {
    save_checkpoint(cfg.select_checkpoint, select_params, result.train_log.steps);
    out << "saved select checkpoint to " << cfg.select_checkpoint << "\n";
  }
  save_pruned_graphs(cfg.pruned_graphs, result.keep_sets);
  out << std::fixed << std::setprecision(4) << "pruned graphs written to " << cfg.pruned_graphs
      << "\nmean kept two-hop concepts: " << result.mean_kept
      << "\ngolden two-hop coverage: " << result.golden_coverage_before << " -> "
      << result.golden_coverage_after << "\n";
  return result;
}

inline std::vector<std::string> tokenize_post_line(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) {
    for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    tokens.push_back(tok);
  }
  return tokens;
}

// Batch generation: one plain-text post per input line, one JSON record per
// output line.
inline void cmd_generate(const RunConfig& cfg, const std::string& input_path,
                         std::ostream& out) {
  if (cfg.checkpoint.empty()) throw UsageError("generate: 'checkpoint' path is required");
  Corpus corpus = load_corpus(cfg);
  ModelParams params = build_model(cfg, corpus);
  load_checkpoint(cfg.checkpoint, params);

  std::ifstream in(input_path);
  if (!in) throw DataError("cannot open posts file: " + input_path);

  std::ofstream file_out;
  std::ostream* sink = &out;
  if (!cfg.output.empty()) {
    file_out.open(cfg.output);
    if (!file_out) throw DataError("cannot write " + cfg.output);
    sink = &file_out;
  }

  RandomSource rng(cfg.seed);
  std::string line;
  long line_no = 0;
  while (read_line(in, line)) {
    ++line_no;
    std::vector<std::string> tokens = tokenize_post_line(line);
    if (tokens.empty()) continue;
    GeneratedRecord record = generate_for_post(params, corpus, tokens, cfg, &rng);
    *sink << record_to_json(record, cfg.trace).dump() << "\n";
  }
  if (line_no == 0) throw DataError("posts file is empty: " + input_path);
}

inline std::string format_eval_tables(const metrics::EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  auto width = [](const std::string& n) { return std::max<int>(12, static_cast<int>(n.size()) + 2); };
  auto row = [&](const std::vector<std::string>& names) {
    for (const std::string& n : names) out << std::left << std::setw(width(n)) << n;
    out << "\n";
    for (const std::string& n : names)
      out << std::left << std::setw(width(n)) << report.get(n);
    out << "\n";
  };
  out << "-- relevance --\n";
  row({"bleu-1", "bleu-2", "bleu-3", "bleu-4"});
  row({"nist-1", "nist-2", "nist-3", "nist-4"});
  row({"rouge-1-f1", "rouge-2-f1", "rouge-l-f1"});
  if (report.has("ppl")) row({"ppl"});
  out << "-- diversity --\n";
  row({"dist-1", "dist-2", "ent-4"});
  out << "-- concepts --\n";
  row({"concept-precision", "concept-recall", "concept-f1"});
  return out.str();
}

// Full metric table between a generated-record file and a reference corpus.
// Perplexity of the references is included when a checkpoint is configured.
inline metrics::EvalReport cmd_evaluate(const RunConfig& cfg, const std::string& generated_path,
                                        const std::string& references_path, std::ostream& out) {
  if (cfg.triples.empty()) throw UsageError("evaluate needs the 'triples' path");
  KnowledgeGraph kg = load_triples(cfg.triples);
  std::vector<std::vector<std::string>> generated = load_generated_responses(generated_path);
  std::vector<ConversationExample> refs = load_conversations(references_path, kg);
  std::vector<std::vector<std::string>> references;
  references.reserve(refs.size());
  for (const ConversationExample& r : refs) references.push_back(r.response);

  metrics::EvalReport report = evaluate_corpus(generated, references, kg, cfg.workers);

  if (!cfg.checkpoint.empty()) {
    Corpus corpus = load_corpus(cfg);
    ModelParams params = build_model(cfg, corpus);
    load_checkpoint(cfg.checkpoint, params);
    Corpus ref_corpus;
    ref_corpus.kg = std::move(kg);
    ref_corpus.words = corpus.words;
    for (ConversationExample& ex : refs) {
      PreparedExample prepared;
      prepared.post_word_ids = word_ids(corpus.words, ex.post);
      prepared.targets = resolve_targets(corpus.words, ref_corpus.kg, ex.response);
      prepared.graph = build_concept_graph(ex.zero_hop, ref_corpus.kg);
      prepared.convo = std::move(ex);
      ref_corpus.examples.push_back(std::move(prepared));
    }
    report.put("ppl", perplexity(params, ref_corpus, cfg.pagerank_lambda, cfg.workers));
  }

  out << "pairs: " << generated.size() << "\n" << format_eval_tables(report);
  if (!cfg.output.empty()) {
    nlohmann::json j;
    for (const auto& [name, value] : report.values) j["metrics"][name] = value;
    j["pairs"] = generated.size();
    std::ofstream json_out(cfg.output);
    if (!json_out) throw DataError("cannot write " + cfg.output);
    json_out << j.dump(2) << "\n";
  }
  return report;
}

// Minimal line-in, response-out loop. ':trace' toggles attention printing,
// ':quit' leaves.
inline void cmd_chat(const RunConfig& cfg, std::istream& in, std::ostream& out) {
  if (cfg.checkpoint.empty()) throw UsageError("chat: 'checkpoint' path is required");
  Corpus corpus = load_corpus(cfg);
  ModelParams params = build_model(cfg, corpus);
  load_checkpoint(cfg.checkpoint, params);

  RunConfig local = cfg;
  RandomSource rng(cfg.seed);
  out << "conceptflow chat (':trace' toggles attention, ':quit' exits)\n";
  std::string line;
  while (out << "> " << std::flush, std::getline(in, line)) {
    if (line == ":quit" || line == ":q") break;
    if (line == ":trace") {
      local.trace = !local.trace;
      out << "trace " << (local.trace ? "on" : "off") << "\n";
      continue;
    }
    std::vector<std::string> tokens = tokenize_post_line(line);
    if (tokens.empty()) continue;
    GeneratedRecord record = generate_for_post(params, corpus, tokens, local, &rng);
    for (size_t i = 0; i < record.response.size(); ++i) {
      if (i) out << ' ';
      out << record.response[i];
    }
    out << "\n";
    if (local.trace) {
      out << std::fixed << std::setprecision(3);
      for (size_t t = 0; t < record.result.trace.size(); ++t) {
        const StepTrace& step = record.result.trace[t];
        out << "  step " << (t + 1) << " [" << source_tag_name(step.source) << "] gate("
            << step.gate_scores[0] << ", " << step.gate_scores[1] << ", " << step.gate_scores[2]
            << ")";
        if (!step.top_central.empty()) {
          out << " central:";
          for (const auto& [id, w] : step.top_central)
            out << ' ' << corpus.kg.concepts.name(id) << '=' << w;
        }
        if (!step.top_flow.empty()) {
          out << " outer:";
          for (const auto& [id, w] : step.top_flow)
            out << ' ' << corpus.kg.concepts.name(id) << '=' << w;
        }
        out << "\n";
      }
    }
  }
}

}  // namespace conceptflow
