#pragma once

// Step-wise response generation: context attention over utterance, central
// concepts and outer flows, a three-way source gate, per-source output
// distributions, the teacher-forced training loss, and free-running
// generation.

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "conceptflow/encoders.hpp"

namespace conceptflow {

// Reserved word ids, fixed in every vocabulary this project builds.
constexpr int kUnkId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;

enum Source : int { kSourceWord = 0, kSourceCentral = 1, kSourceOuter = 2 };

struct DecodeContext {
  const UtteranceEncoding* utterance = nullptr;
  const CentralEncoding* central = nullptr;  // may be empty
  const OuterEncoding* outer = nullptr;      // may be empty
  std::vector<int> two_hop_ids;              // sorted V2 emission candidates

  bool has_central() const { return central != nullptr && !central->empty(); }
  bool has_outer() const { return outer != nullptr && !outer->empty(); }
  int two_hop_index(int concept_id) const {
    auto it = std::lower_bound(two_hop_ids.begin(), two_hop_ids.end(), concept_id);
    if (it == two_hop_ids.end() || *it != concept_id) return -1;
    return static_cast<int>(it - two_hop_ids.begin());
  }
};

struct DecoderStep {
  Tensor state;        // s_t
  Tensor gate_scores;  // three unnormalized source logits
  Vec text_attention;
  Vec central_attention;
  Vec flow_attention;
};

// Golden response token resolved against the vocabularies. concept_id is -1
// for plain words.
struct GoldenToken {
  std::string text;
  int word_id = kUnkId;
  int concept_id = -1;
};

// Embedding of the previous output in the decoder's input space: words use
// their word table row, concepts their concept table row (projected when the
// dimensions differ).
inline Tensor token_embedding(Tape* tape, const ModelParams& params, int source,
                              int word_id, int concept_id) {
  if (source == kSourceWord)
    return row(tape, params.word_emb, word_id);
  Tensor emb = row(tape, params.concept_emb, concept_id);
  return maybe_project(tape, params.concept_word_proj, emb);
}

inline DecoderStep decode_step(Tape* tape, const ModelParams& params,
                               const DecodeContext& ctx, const Tensor& s_prev,
                               const Tensor& y_prev) {
  DecoderStep step;

  Tensor text_att = softmax(tape, dots(tape, s_prev, ctx.utterance->states));
  Tensor c_text = weighted_sum(tape, text_att, ctx.utterance->states);
  step.text_attention = text_att.values();

  Tensor c_central;
  if (ctx.has_central()) {
    Tensor beta = softmax(tape, dots(tape, s_prev, ctx.central->node_vecs));
    c_central = weighted_sum(tape, beta, ctx.central->node_vecs);
    step.central_attention = beta.values();
  } else {
    c_central = Tensor::zeros({params.dims.hidden});
  }

  Tensor c_flow;
  if (ctx.has_outer()) {
    Tensor s_flow = maybe_project(tape, params.state_flow_proj, s_prev);
    Tensor gamma = softmax(tape, dots(tape, s_flow, ctx.outer->flow_vecs));
    c_flow = weighted_sum(tape, gamma, ctx.outer->flow_vecs);
    step.flow_attention = gamma.values();
  } else {
    c_flow = Tensor::zeros({2 * params.dims.concept_dim});
  }

  const Tensor parts[] = {c_text, c_central, c_flow};
  Tensor context = apply(tape, params.context_ffn,
                         concat(tape, std::span<const Tensor>(parts, 3)));
  step.state = gru_step(tape, params.decoder_cell, s_prev, concat(tape, context, y_prev));
  step.gate_scores = apply(tape, params.gate_ffn, step.state);
  return step;
}

// Unmasked gate: three FFN heads on s_t, argmax with ties toward the lower
// index.
inline std::pair<Tensor, int> gate(Tape* tape, const ModelParams& params, const Tensor& s) {
  Tensor logits = apply(tape, params.gate_ffn, s);
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (logits[i] > logits[best]) best = i;
  return {logits, best};
}

// Inference-time source choice; sources with empty candidate sets are never
// picked.
inline int pick_source(const Tensor& logits, const DecodeContext& ctx) {
  int best = kSourceWord;
  double best_score = logits[kSourceWord];
  if (ctx.has_central() && logits[kSourceCentral] > best_score) {
    best = kSourceCentral;
    best_score = logits[kSourceCentral];
  }
  if (ctx.has_outer() && !ctx.two_hop_ids.empty() && logits[kSourceOuter] > best_score)
    best = kSourceOuter;
  return best;
}

// Output distribution for one source: words, central concepts (GNN vectors)
// or two-hop concepts (raw embeddings).
inline Tensor emit_distribution(Tape* tape, const ModelParams& params,
                                const DecodeContext& ctx, const Tensor& s, int source) {
  switch (source) {
    case kSourceWord: {
      Tensor u = maybe_project(tape, params.state_word_proj, s);
      return softmax(tape, matvec(tape, params.word_emb, u));
    }
    case kSourceCentral: {
      if (!ctx.has_central()) throw DataError("emit: no central concepts available");
      return softmax(tape, dots(tape, s, ctx.central->node_vecs));
    }
    case kSourceOuter: {
      if (ctx.two_hop_ids.empty()) throw DataError("emit: no two-hop concepts available");
      Tensor u = maybe_project(tape, params.state_concept_proj, s);
      std::vector<Tensor> rows;
      rows.reserve(ctx.two_hop_ids.size());
      for (int id : ctx.two_hop_ids) rows.push_back(row(tape, params.concept_emb, id));
      return softmax(tape, dots(tape, u, rows));
    }
    default:
      throw DataError("emit: invalid source " + std::to_string(source));
  }
}

// Source class of a golden token: two-hop concept, then central concept,
// then plain word.
inline int golden_class(const DecodeContext& ctx, int concept_id) {
  if (concept_id >= 0) {
    if (ctx.two_hop_index(concept_id) >= 0) return kSourceOuter;
    if (ctx.has_central() && ctx.central->index_of(concept_id) >= 0) return kSourceCentral;
  }
  return kSourceWord;
}

struct LossStats {
  int steps = 0;
  int word_fallbacks = 0;  // concept targets that fell back to the word class
};

// Teacher-forced loss, averaged per step: cross-entropy of the gate against
// the golden source class plus cross-entropy of that class's distribution
// against the golden token. The response is followed by an end-of-sequence
// step in the word class.
inline Tensor training_loss(Tape* tape, const ModelParams& params, const DecodeContext& ctx,
                            const std::vector<GoldenToken>& golden,
                            LossStats* stats = nullptr) {
  if (golden.empty()) throw DataError("training_loss: empty golden response");

  std::vector<GoldenToken> targets = golden;
  targets.push_back({"</s>", kEosId, -1});

  Tensor s = ctx.utterance->last();
  Tensor y = token_embedding(tape, params, kSourceWord, kBosId, -1);
  Tensor total;
  int fallbacks = 0;

  for (const GoldenToken& target : targets) {
    DecoderStep step = decode_step(tape, params, ctx, s, y);

    int cls = golden_class(ctx, target.concept_id);
    int index = -1;
    if (cls == kSourceOuter) index = ctx.two_hop_index(target.concept_id);
    if (cls == kSourceCentral) index = ctx.central->index_of(target.concept_id);
    if (cls != kSourceWord && index < 0) cls = kSourceWord;
    if (cls == kSourceWord) {
      // Concept tokens that are not reachable through this example's graph
      // are trained as plain words.
      if (target.concept_id >= 0) ++fallbacks;
      index = target.word_id;
    }

    Tensor gate_dist = softmax(tape, step.gate_scores);
    Tensor emit = emit_distribution(tape, params, ctx, step.state, cls);
    Tensor step_loss = add(tape, cross_entropy(tape, gate_dist, cls),
                           cross_entropy(tape, emit, index));
    total = total.defined() ? add(tape, total, step_loss) : step_loss;

    y = token_embedding(tape, params, cls, target.word_id, target.concept_id);
    s = step.state;
  }

  if (stats != nullptr) {
    stats->steps = static_cast<int>(targets.size());
    stats->word_fallbacks = fallbacks;
  }
  return scale(tape, total, 1.0 / static_cast<double>(targets.size()));
}

// Decoder states s_1..s_n of a teacher-forced pass over the golden response
// (including the end-of-sequence step). Used by the two-hop selection stage.
inline std::vector<Tensor> teacher_forced_states(const ModelParams& params,
                                                 const DecodeContext& ctx,
                                                 const std::vector<GoldenToken>& golden) {
  if (golden.empty()) throw DataError("teacher_forced_states: empty golden response");
  std::vector<GoldenToken> targets = golden;
  targets.push_back({"</s>", kEosId, -1});

  std::vector<Tensor> states;
  states.reserve(targets.size());
  Tensor s = ctx.utterance->last();
  Tensor y = token_embedding(nullptr, params, kSourceWord, kBosId, -1);
  for (const GoldenToken& target : targets) {
    DecoderStep step = decode_step(nullptr, params, ctx, s, y);
    states.push_back(step.state);
    int cls = golden_class(ctx, target.concept_id);
    y = token_embedding(nullptr, params, cls, target.word_id, target.concept_id);
    s = step.state;
  }
  return states;
}

struct GeneratedToken {
  std::string text;
  int source = kSourceWord;
  int id = -1;  // word id or concept id, depending on source
};

struct StepTrace {
  int source = kSourceWord;
  std::array<double, 3> gate_scores{};
  std::vector<std::pair<int, double>> top_text;     // (position, weight)
  std::vector<std::pair<int, double>> top_central;  // (concept id, weight)
  std::vector<std::pair<int, double>> top_flow;     // (head concept id, weight)
};

struct GenerationResult {
  std::vector<GeneratedToken> tokens;
  std::vector<StepTrace> trace;
  bool ended_with_eos = false;
};

struct GenerateOptions {
  enum class Mode { greedy, top_k } mode = Mode::greedy;
  int max_len = 20;
  int sample_k = 5;
  RandomSource* rng = nullptr;  // required for top_k
};

namespace detail {

inline int argmax_index(const Tensor& dist) {
  int best = 0;
  for (int i = 1; i < dist.size(); ++i)
    if (dist[i] > dist[best]) best = i;
  return best;
}

inline int sample_top_k(const Tensor& dist, int k, RandomSource& rng) {
  std::vector<int> order(static_cast<size_t>(dist.size()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dist[a] > dist[b]; });
  int kept = std::min<int>(k, dist.size());
  double mass = 0.0;
  for (int i = 0; i < kept; ++i) mass += dist[order[static_cast<size_t>(i)]];
  double draw = rng.next_double() * mass;
  double cum = 0.0;
  for (int i = 0; i < kept; ++i) {
    cum += dist[order[static_cast<size_t>(i)]];
    if (draw < cum) return order[static_cast<size_t>(i)];
  }
  return order[static_cast<size_t>(kept - 1)];
}

inline std::vector<std::pair<int, double>> top_weights(const Vec& weights,
                                                       const std::vector<int>& labels,
                                                       size_t limit = 5) {
  std::vector<std::pair<int, double>> out;
  for (size_t i = 0; i < weights.size(); ++i)
    out.emplace_back(labels.empty() ? static_cast<int>(i) : labels[i], weights[i]);
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (out.size() > limit) out.resize(limit);
  return out;
}

}  // namespace detail

// Free-running generation. Greedy mode is a pure function of (post, graph,
// params); top-k sampling draws from the caller's random source.
inline GenerationResult generate(const ModelParams& params, const DecodeContext& ctx,
                                 const Vocab& words, const Vocab& concepts,
                                 const GenerateOptions& opts) {
  if (opts.max_len < 1) throw DataError("generate: max_len must be >= 1");
  if (opts.mode == GenerateOptions::Mode::top_k && opts.rng == nullptr)
    throw DataError("generate: top-k sampling needs a random source");

  GenerationResult result;
  Tensor s = ctx.utterance->last();
  Tensor y = token_embedding(nullptr, params, kSourceWord, kBosId, -1);

  for (int t = 0; t < opts.max_len; ++t) {
    DecoderStep step = decode_step(nullptr, params, ctx, s, y);
    int source = pick_source(step.gate_scores, ctx);
    Tensor dist = emit_distribution(nullptr, params, ctx, step.state, source);
    int index = opts.mode == GenerateOptions::Mode::greedy
                    ? detail::argmax_index(dist)
                    : detail::sample_top_k(dist, opts.sample_k, *opts.rng);

    StepTrace trace;
    trace.source = source;
    for (int i = 0; i < 3; ++i) trace.gate_scores[static_cast<size_t>(i)] = step.gate_scores[i];
    trace.top_text = detail::top_weights(step.text_attention, {});
    if (ctx.has_central())
      trace.top_central = detail::top_weights(step.central_attention, ctx.central->node_ids);
    if (ctx.has_outer())
      trace.top_flow = detail::top_weights(step.flow_attention, ctx.outer->head_ids);
    result.trace.push_back(std::move(trace));

    GeneratedToken token;
    token.source = source;
    if (source == kSourceWord) {
      if (index == kEosId) {
        result.ended_with_eos = true;
        break;
      }
      token.id = index;
      token.text = words.name(index);
      y = token_embedding(nullptr, params, kSourceWord, index, -1);
    } else {
      int concept_id = source == kSourceCentral ? ctx.central->node_ids[static_cast<size_t>(index)]
                                                : ctx.two_hop_ids[static_cast<size_t>(index)];
      token.id = concept_id;
      token.text = concepts.name(concept_id);
      y = token_embedding(nullptr, params, source, -1, concept_id);
    }
    result.tokens.push_back(std::move(token));
    s = step.state;
  }
  return result;
}

}  // namespace conceptflow
