#pragma once

// Corpus-level plumbing shared by the CLI commands and the test suites:
// vocabulary assembly, per-example graphs and encodings, the training loop,
// the two-hop selection stage, batch generation and corpus evaluation.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "conceptflow/config.hpp"
#include "conceptflow/decoder.hpp"
#include "conceptflow/metrics.hpp"
#include "conceptflow/selection.hpp"

namespace conceptflow {

struct PreparedExample {
  ConversationExample convo;
  std::vector<int> post_word_ids;
  std::vector<GoldenToken> targets;
  ConceptGraph graph;
};

struct Corpus {
  KnowledgeGraph kg;
  Vocab words;
  std::vector<PreparedExample> examples;
};

inline Vocab make_word_vocab() {
  Vocab words;
  words.add("<unk>");
  words.add("<bos>");
  words.add("</s>");
  return words;
}

inline std::vector<int> word_ids(const Vocab& words, const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) {
    int id = words.find(t);
    ids.push_back(id < 0 ? kUnkId : id);
  }
  return ids;
}

inline std::vector<GoldenToken> resolve_targets(const Vocab& words, const KnowledgeGraph& kg,
                                                const std::vector<std::string>& tokens) {
  std::vector<GoldenToken> targets;
  targets.reserve(tokens.size());
  for (const std::string& t : tokens) {
    GoldenToken tok;
    tok.text = t;
    int id = words.find(t);
    tok.word_id = id < 0 ? kUnkId : id;
    tok.concept_id = kg.concepts.find(t);
    targets.push_back(std::move(tok));
  }
  return targets;
}

// Loads the knowledge graph and conversations, builds the word vocabulary in
// first-appearance order (after the reserved tokens) and the per-example
// concept graphs.
inline Corpus load_corpus(const RunConfig& cfg) {
  if (cfg.triples.empty()) throw UsageError("config: 'triples' path is required");
  if (cfg.conversations.empty()) throw UsageError("config: 'conversations' path is required");

  Corpus corpus;
  corpus.kg = load_triples(cfg.triples);
  std::vector<ConversationExample> convos = load_conversations(cfg.conversations, corpus.kg);
  if (convos.empty()) throw DataError("conversation corpus is empty: " + cfg.conversations);

  corpus.words = make_word_vocab();
  for (const ConversationExample& ex : convos) {
    for (const std::string& t : ex.post) corpus.words.add(t);
    for (const std::string& t : ex.response) corpus.words.add(t);
  }

  corpus.examples.reserve(convos.size());
  for (ConversationExample& ex : convos) {
    PreparedExample prepared;
    prepared.post_word_ids = word_ids(corpus.words, ex.post);
    prepared.targets = resolve_targets(corpus.words, corpus.kg, ex.response);
    prepared.graph = build_concept_graph(ex.zero_hop, corpus.kg);
    prepared.convo = std::move(ex);
    corpus.examples.push_back(std::move(prepared));
  }
  return corpus;
}

// Pruned-graph file: one JSON record per example, {"keep": [concept ids]}.
inline void save_pruned_graphs(const std::string& path,
                               const std::vector<std::vector<int>>& keep_sets) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write pruned-graph file: " + path);
  for (const auto& keep : keep_sets) {
    nlohmann::json record;
    record["keep"] = keep;
    out << record.dump() << '\n';
  }
}

inline std::vector<std::vector<int>> load_pruned_graphs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pruned-graph file: " + path);
  std::vector<std::vector<int>> keep_sets;
  std::string line;
  long line_no = 0;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("keep") || !record.at("keep").is_array())
      throw ParseError(path, line_no, "expected {\"keep\": [ids]}");
    keep_sets.push_back(record.at("keep").get<std::vector<int>>());
  }
  return keep_sets;
}

inline void apply_pruning(Corpus& corpus, const std::string& path) {
  std::vector<std::vector<int>> keep_sets = load_pruned_graphs(path);
  if (keep_sets.size() != corpus.examples.size())
    throw DataError("pruned-graph file has " + std::to_string(keep_sets.size()) +
                    " records for " + std::to_string(corpus.examples.size()) + " examples");
  for (size_t i = 0; i < keep_sets.size(); ++i)
    corpus.examples[i].graph = prune_two_hop(corpus.examples[i].graph, keep_sets[i]);
}

inline ModelDims dims_for_corpus(const RunConfig& cfg, const Corpus& corpus,
                                 int hidden_override = -1) {
  ModelDims dims;
  dims.word_count = corpus.words.size();
  dims.concept_count = corpus.kg.concept_count();
  dims.relation_count = corpus.kg.relation_count();
  dims.word_dim = cfg.word_dim;
  dims.concept_dim = cfg.concept_dim;
  dims.hidden = hidden_override > 0 ? hidden_override : cfg.hidden;
  dims.gnn_layers = cfg.layers;
  return dims;
}

// Concept/relation embeddings come from the margin-ranking pretraining, or
// from previously saved embedding files when cfg.embeddings names an existing
// pair.
inline ModelParams build_model(const RunConfig& cfg, const Corpus& corpus,
                               int hidden_override = -1, std::ostream* log = nullptr) {
  ModelDims dims = dims_for_corpus(cfg, corpus, hidden_override);
  InitOptions opts;
  opts.scale = cfg.init_scale;
  opts.word_scale = 0.1;

  TranseResult pretrained;
  bool have_pretrained = false;
  std::string concept_path = cfg.embeddings.empty() ? "" : cfg.embeddings + ".concept.vec";
  std::string relation_path = cfg.embeddings.empty() ? "" : cfg.embeddings + ".relation.vec";

  if (!cfg.embeddings.empty() && std::filesystem::exists(concept_path) &&
      std::filesystem::exists(relation_path)) {
    EmbeddingFile concepts = load_embedding_file(concept_path);
    EmbeddingFile relations = load_embedding_file(relation_path);
    if (concepts.names != corpus.kg.concepts.items() ||
        relations.names != corpus.kg.relations.items())
      throw DataError("saved embeddings do not match the knowledge graph vocabulary");
    pretrained.concept_vecs = std::move(concepts.rows);
    pretrained.relation_vecs = std::move(relations.rows);
    have_pretrained = true;
    if (log) *log << "loaded pretrained embeddings from " << cfg.embeddings << ".*.vec\n";
  } else if (cfg.transe_epochs > 0) {
    pretrained = pretrain_transe(corpus.kg, cfg.concept_dim, cfg.transe_epochs,
                                 cfg.transe_margin, cfg.transe_lr, cfg.seed);
    have_pretrained = true;
    if (log)
      *log << "pretrained embeddings: mean triple distance " << pretrained.initial_mean_distance
           << " -> " << pretrained.final_mean_distance << "\n";
    if (!cfg.embeddings.empty()) {
      save_embedding_file(concept_path, corpus.kg.concepts.items(), pretrained.concept_vecs);
      save_embedding_file(relation_path, corpus.kg.relations.items(), pretrained.relation_vecs);
    }
  }

  if (have_pretrained) opts.pretrained = &pretrained;
  return init_model(dims, cfg.seed, opts);
}

struct EncodedExample {
  UtteranceEncoding utterance;
  CentralEncoding central;
  OuterEncoding outer;
  DecodeContext ctx;
};

// Encodings plus a context wired to them; keep the struct alive while
// decoding. Posts with no linked concepts get the word-only degenerate path.
inline void encode_example(Tape* tape, const ModelParams& params,
                           const PreparedExample& example, double pagerank_lambda,
                           EncodedExample& out) {
  out.utterance = encode_utterance(tape, params, example.post_word_ids);
  if (!example.graph.zero_hop.empty()) {
    out.central = encode_central(tape, params, example.graph, out.utterance, pagerank_lambda);
    out.outer = encode_outer(tape, params, example.graph);
  } else {
    out.central = CentralEncoding{};
    out.outer = OuterEncoding{};
  }
  out.ctx = DecodeContext{};
  out.ctx.utterance = &out.utterance;
  out.ctx.central = &out.central;
  out.ctx.outer = &out.outer;
  out.ctx.two_hop_ids = example.graph.two_hop;
}

struct TrainLog {
  std::vector<double> epoch_mean_loss;
  long word_fallbacks = 0;
  uint64_t steps = 0;
};

// Per-example Adam with a seed-deterministic shuffle each epoch.
inline TrainLog train_model(ModelParams& params, const Corpus& corpus, double lr,
                            int epochs, uint64_t seed,
                            const std::vector<size_t>* subset = nullptr,
                            std::ostream* log = nullptr, double pagerank_lambda = 0.5) {
  std::vector<size_t> order;
  if (subset != nullptr) {
    order = *subset;
  } else {
    order.resize(corpus.examples.size());
    std::iota(order.begin(), order.end(), 0);
  }
  if (order.empty()) throw DataError("train: no examples selected");

  Adam adam(lr);
  RandomSource rng(seed ^ 0x5eedULL);
  TrainLog result;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (size_t idx : order) {
      const PreparedExample& example = corpus.examples[idx];
      Tape tape;
      EncodedExample enc;
      encode_example(&tape, params, example, pagerank_lambda, enc);
      LossStats stats;
      Tensor loss = training_loss(&tape, params, enc.ctx, example.targets, &stats);
      params.zero_grad();
      tape.backward(loss);
      adam.step(params);
      total += loss.value();
      result.word_fallbacks += stats.word_fallbacks;
      ++result.steps;
    }
    result.epoch_mean_loss.push_back(total / static_cast<double>(order.size()));
    if (log)
      *log << "epoch " << (epoch + 1) << "/" << epochs << " mean loss "
           << result.epoch_mean_loss.back() << "\n";
  }
  return result;
}

inline double corpus_mean_loss(const ModelParams& params, const Corpus& corpus,
                               double pagerank_lambda = 0.5) {
  double total = 0.0;
  for (const PreparedExample& example : corpus.examples) {
    EncodedExample enc;
    encode_example(nullptr, params, example, pagerank_lambda, enc);
    total += training_loss(nullptr, params, enc.ctx, example.targets).value();
  }
  return total / static_cast<double>(corpus.examples.size());
}

// exp of the corpus mean per-token negative log-likelihood under the
// factorized gate-then-token distribution. Not comparable across different
// tokenizations.
inline double perplexity(const ModelParams& params, const Corpus& corpus,
                         double pagerank_lambda = 0.5, int workers = 1) {
  if (corpus.examples.empty()) throw DataError("perplexity: empty corpus");
  std::vector<double> nll(corpus.examples.size());
  std::vector<int> steps(corpus.examples.size());
  auto run_range = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const PreparedExample& example = corpus.examples[i];
      EncodedExample enc;
      encode_example(nullptr, params, example, pagerank_lambda, enc);
      LossStats stats;
      Tensor loss = training_loss(nullptr, params, enc.ctx, example.targets, &stats);
      nll[i] = loss.value() * stats.steps;
      steps[i] = stats.steps;
    }
  };
  if (workers <= 1) {
    run_range(0, corpus.examples.size());
  } else {
    size_t n = corpus.examples.size();
    size_t chunk = (n + static_cast<size_t>(workers) - 1) / static_cast<size_t>(workers);
    std::vector<std::thread> pool;
    for (size_t begin = 0; begin < n; begin += chunk)
      pool.emplace_back(run_range, begin, std::min(n, begin + chunk));
    for (auto& t : pool) t.join();
  }
  double total_nll = 0.0;
  long total_steps = 0;
  for (size_t i = 0; i < nll.size(); ++i) {
    total_nll += nll[i];
    total_steps += steps[i];
  }
  return std::exp(total_nll / static_cast<double>(total_steps));
}

// ---------------------------------------------------------------------------
// Two-hop selection stage.

struct SelectStageResult {
  size_t trained_on = 0;
  std::vector<std::vector<int>> keep_sets;
  double mean_kept = 0.0;
  double golden_coverage_before = 0.0;  // over examples with golden two-hop concepts
  double golden_coverage_after = 0.0;
  TrainLog train_log;
};

inline std::vector<size_t> select_training_subset(size_t n, double fraction, uint64_t seed) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RandomSource rng(seed ^ 0x5e1ec7ULL);
  rng.shuffle(order);
  size_t kept = std::max<size_t>(1, static_cast<size_t>(std::ceil(fraction * static_cast<double>(n))));
  order.resize(std::min(order.size(), kept));
  return order;
}

// Scores every example's V2 with the given select model and keeps the top K.
inline SelectStageResult score_and_prune(const ModelParams& select_params,
                                         const Corpus& corpus, int k,
                                         double pagerank_lambda = 0.5) {
  SelectStageResult result;
  double covered_before = 0.0, covered_after = 0.0;
  size_t with_golden_two_hop = 0;

  for (const PreparedExample& example : corpus.examples) {
    std::vector<int> keep;
    if (!example.graph.two_hop.empty()) {
      EncodedExample enc;
      encode_example(nullptr, select_params, example, pagerank_lambda, enc);
      std::vector<Tensor> states =
          teacher_forced_states(select_params, enc.ctx, example.targets);
      SelectionScore score = score_two_hop(select_params, states, example.graph.two_hop);
      keep = select_top_k(score, k);
    }

    std::set<int> golden(example.convo.golden.begin(), example.convo.golden.end());
    std::set<int> two(example.graph.two_hop.begin(), example.graph.two_hop.end());
    std::set<int> kept(keep.begin(), keep.end());
    size_t gold_two = 0, gold_kept = 0;
    for (int g : golden) {
      if (two.count(g)) ++gold_two;
      if (kept.count(g)) ++gold_kept;
    }
    if (gold_two > 0) {
      ++with_golden_two_hop;
      covered_before += 1.0;
      covered_after += static_cast<double>(gold_kept) / static_cast<double>(gold_two);
    }
    result.mean_kept += static_cast<double>(keep.size());
    result.keep_sets.push_back(std::move(keep));
  }

  result.mean_kept /= static_cast<double>(corpus.examples.size());
  if (with_golden_two_hop > 0) {
    result.golden_coverage_before = covered_before / static_cast<double>(with_golden_two_hop);
    result.golden_coverage_after = covered_after / static_cast<double>(with_golden_two_hop);
  }
  return result;
}

// Trains the smaller select-architecture model on a corpus fraction, then
// scores and prunes every example.
inline SelectStageResult run_select_stage(const RunConfig& cfg, const Corpus& corpus,
                                          ModelParams& select_params, bool already_trained,
                                          std::ostream* log = nullptr) {
  if (!already_trained) {
    std::vector<size_t> subset =
        select_training_subset(corpus.examples.size(), cfg.select_fraction, cfg.seed);
    if (log) *log << "select stage: training on " << subset.size() << " examples\n";
    TrainLog train_log = train_model(select_params, corpus, cfg.lr, cfg.epochs, cfg.seed,
                                     &subset, log, cfg.pagerank_lambda);
    SelectStageResult result = score_and_prune(select_params, corpus, cfg.k_top,
                                               cfg.pagerank_lambda);
    result.trained_on = subset.size();
    result.train_log = std::move(train_log);
    return result;
  }
  return score_and_prune(select_params, corpus, cfg.k_top, cfg.pagerank_lambda);
}

// ---------------------------------------------------------------------------
// Batch generation and evaluation.

struct GeneratedRecord {
  std::vector<std::string> post;
  std::vector<std::string> response;
  std::vector<std::string> source_tags;
  GenerationResult result;
  nlohmann::json encoder_trace;  // filled when tracing is on
};

// Machine-readable dump of the encoder internals: per-layer PageRank and
// neighborhood attention over the central graph, and the per-head flow
// attention.
inline nlohmann::json encoder_trace_json(const EncodedExample& enc,
                                         const KnowledgeGraph& kg) {
  nlohmann::json trace;
  const CentralEncoding& central = enc.central;
  if (!central.empty()) {
    nlohmann::json pagerank = nlohmann::json::array();
    for (const auto& layer : central.pagerank) {
      nlohmann::json scores = nlohmann::json::array();
      for (size_t i = 0; i < layer.size(); ++i)
        scores.push_back({{"concept", kg.concepts.name(central.node_ids[i])},
                          {"score", layer[i]}});
      pagerank.push_back(std::move(scores));
    }
    trace["pagerank"] = std::move(pagerank);

    nlohmann::json layers = nlohmann::json::array();
    for (const auto& per_node : central.edge_attention) {
      nlohmann::json nodes = nlohmann::json::array();
      for (size_t i = 0; i < per_node.size(); ++i) {
        if (per_node[i].empty()) continue;
        nlohmann::json edges = nlohmann::json::array();
        for (size_t k = 0; k < per_node[i].size(); ++k) {
          const CentralEncoding::EdgeRef& e = central.incident[i][k];
          edges.push_back({{"neighbor", kg.concepts.name(e.neighbor)},
                           {"relation", kg.relations.name(e.relation)},
                           {"weight", per_node[i][k]}});
        }
        nodes.push_back({{"concept", kg.concepts.name(central.node_ids[i])},
                         {"edges", std::move(edges)}});
      }
      layers.push_back(std::move(nodes));
    }
    trace["relation_attention"] = std::move(layers);
  }

  const OuterEncoding& outer = enc.outer;
  if (!outer.empty()) {
    nlohmann::json heads = nlohmann::json::array();
    for (size_t h = 0; h < outer.head_ids.size(); ++h) {
      nlohmann::json flows = nlohmann::json::array();
      for (size_t k = 0; k < outer.thetas[h].size(); ++k)
        flows.push_back({{"tail", kg.concepts.name(outer.flows[h][k].tail)},
                         {"relation", kg.relations.name(outer.flows[h][k].relation)},
                         {"weight", outer.thetas[h][k]}});
      heads.push_back({{"head", kg.concepts.name(outer.head_ids[h])},
                       {"flows", std::move(flows)}});
    }
    trace["flow_attention"] = std::move(heads);
  }
  return trace;
}

inline const char* source_tag_name(int source) {
  switch (source) {
    case kSourceCentral: return "central";
    case kSourceOuter: return "outer";
    default: return "word";
  }
}

inline GeneratedRecord generate_for_post(const ModelParams& params, const Corpus& corpus,
                                         const std::vector<std::string>& post_tokens,
                                         const RunConfig& cfg, RandomSource* rng) {
  if (post_tokens.empty()) throw DataError("generate: empty post");
  PreparedExample example;
  example.convo.post = post_tokens;
  example.post_word_ids = word_ids(corpus.words, post_tokens);
  example.graph = build_concept_graph(link_entities(post_tokens, corpus.kg), corpus.kg);

  EncodedExample enc;
  encode_example(nullptr, params, example, cfg.pagerank_lambda, enc);

  GenerateOptions opts;
  opts.mode = cfg.decode_mode == "top_k" ? GenerateOptions::Mode::top_k
                                         : GenerateOptions::Mode::greedy;
  opts.max_len = cfg.max_len;
  opts.sample_k = cfg.sample_k;
  opts.rng = rng;

  GeneratedRecord record;
  record.post = post_tokens;
  record.result = generate(params, enc.ctx, corpus.words, corpus.kg.concepts, opts);
  for (const GeneratedToken& tok : record.result.tokens) {
    record.response.push_back(tok.text);
    record.source_tags.push_back(source_tag_name(tok.source));
  }
  if (cfg.trace) record.encoder_trace = encoder_trace_json(enc, corpus.kg);
  return record;
}

// Attention traces are serialized only when requested.
inline nlohmann::json record_to_json(const GeneratedRecord& record, bool include_trace = false) {
  nlohmann::json j;
  j["post"] = record.post;
  j["response"] = record.response;
  j["source_tags"] = record.source_tags;
  if (include_trace && !record.result.trace.empty()) {
    nlohmann::json steps = nlohmann::json::array();
    for (const StepTrace& t : record.result.trace) {
      nlohmann::json step;
      step["source"] = source_tag_name(t.source);
      step["gate_scores"] = t.gate_scores;
      auto pairs = [](const std::vector<std::pair<int, double>>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [id, w] : v) arr.push_back({{"id", id}, {"weight", w}});
        return arr;
      };
      step["text_attention"] = pairs(t.top_text);
      step["central_attention"] = pairs(t.top_central);
      step["flow_attention"] = pairs(t.top_flow);
      steps.push_back(std::move(step));
    }
    j["trace"] = std::move(steps);
  }
  if (!record.encoder_trace.is_null()) j["encoder_trace"] = record.encoder_trace;
  return j;
}

// Generated-record file: the JSONL emitted by batch generation.
inline std::vector<std::vector<std::string>> load_generated_responses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open generated file: " + path);
  std::vector<std::vector<std::string>> responses;
  std::string line;
  long line_no = 0;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("response") || !record.at("response").is_array())
      throw ParseError(path, line_no, "expected a record with a 'response' token array");
    responses.push_back(record.at("response").get<std::vector<std::string>>());
  }
  return responses;
}

// Full automatic metric table over aligned generated/reference corpora.
// Concept P/R/F1 uses entity linking on both sides, averaged per example.
inline metrics::EvalReport evaluate_corpus(const std::vector<std::vector<std::string>>& generated,
                                           const std::vector<std::vector<std::string>>& references,
                                           const KnowledgeGraph& kg, int workers = 1) {
  if (generated.size() != references.size())
    throw DataError("evaluate: generated and reference counts differ (" +
                    std::to_string(generated.size()) + " vs " +
                    std::to_string(references.size()) + ")");
  if (generated.empty()) throw DataError("evaluate: empty corpus");

  metrics::EvalReport report;
  for (int n = 1; n <= 4; ++n)
    report.put("bleu-" + std::to_string(n), metrics::bleu(generated, references, n));
  for (int n = 1; n <= 4; ++n)
    report.put("nist-" + std::to_string(n), metrics::nist(generated, references, n));

  size_t count = generated.size();
  struct PerExample {
    metrics::Prf r1, r2, rl, concepts;
  };
  std::vector<PerExample> per(count);
  auto run_range = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      per[i].r1 = metrics::rouge(generated[i], references[i], metrics::RougeVariant::one);
      per[i].r2 = metrics::rouge(generated[i], references[i], metrics::RougeVariant::two);
      per[i].rl = metrics::rouge(generated[i], references[i], metrics::RougeVariant::lcs);
      auto gen_ids = link_entities(generated[i], kg);
      auto gold_ids = link_entities(references[i], kg);
      per[i].concepts = metrics::concept_prf({gen_ids.begin(), gen_ids.end()},
                                             {gold_ids.begin(), gold_ids.end()});
    }
  };
  if (workers <= 1) {
    run_range(0, count);
  } else {
    size_t chunk = (count + static_cast<size_t>(workers) - 1) / static_cast<size_t>(workers);
    std::vector<std::thread> pool;
    for (size_t begin = 0; begin < count; begin += chunk)
      pool.emplace_back(run_range, begin, std::min(count, begin + chunk));
    for (auto& t : pool) t.join();
  }

  auto put_mean = [&](const std::string& name, auto proj) {
    double p = 0.0, r = 0.0, f = 0.0;
    for (const PerExample& e : per) {
      const metrics::Prf& v = proj(e);
      p += v.precision;
      r += v.recall;
      f += v.f1;
    }
    double n = static_cast<double>(count);
    report.put(name + "-precision", p / n);
    report.put(name + "-recall", r / n);
    report.put(name + "-f1", f / n);
  };
  put_mean("rouge-1", [](const PerExample& e) -> const metrics::Prf& { return e.r1; });
  put_mean("rouge-2", [](const PerExample& e) -> const metrics::Prf& { return e.r2; });
  put_mean("rouge-l", [](const PerExample& e) -> const metrics::Prf& { return e.rl; });

  report.put("dist-1", metrics::dist_n(generated, 1));
  report.put("dist-2", metrics::dist_n(generated, 2));
  report.put("ent-4", metrics::ent_n(generated, 4));
  put_mean("concept", [](const PerExample& e) -> const metrics::Prf& { return e.concepts; });
  return report;
}

}  // namespace conceptflow
