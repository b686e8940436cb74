#pragma once

// Conversation encoders: utterance GRU, the central-graph network that
// propagates utterance state through V0 u V1, and the relation-aware
// attention over V1 -> V2 flows.

#include <algorithm>
#include <vector>

#include "conceptflow/concept_graph.hpp"
#include "conceptflow/model.hpp"

namespace conceptflow {

struct UtteranceEncoding {
  std::vector<Tensor> states;  // h_1..h_m
  const Tensor& last() const { return states.back(); }
};

// h_i = GRU(h_{i-1}, embed(x_i)) with h_0 = 0. Unknown words are the
// caller's problem: ids must already be valid rows of the word table.
inline UtteranceEncoding encode_utterance(Tape* tape, const ModelParams& params,
                                          const std::vector<int>& word_ids) {
  if (word_ids.empty()) throw DataError("encode_utterance: empty post");
  UtteranceEncoding enc;
  enc.states.reserve(word_ids.size());
  Tensor h = Tensor::zeros({params.dims.hidden});
  for (int id : word_ids) {
    h = gru_step(tape, params.encoder_cell, h, row(tape, params.word_emb, id));
    enc.states.push_back(h);
  }
  return enc;
}

// Personalized PageRank over the central graph: mass starts uniform on V0,
// and at each layer a walker either stays put (1-lambda) or moves to a
// uniformly random incident edge. Walkers on isolated nodes stay where they
// are, so the scores remain a distribution at every layer.
inline std::vector<std::vector<double>> pagerank_layers(const ConceptGraph& graph,
                                                        int layers, double lambda) {
  std::vector<int> nodes = graph.central_ids();
  std::vector<std::vector<double>> scores;
  if (nodes.empty()) return scores;

  auto index_of = [&](int id) {
    return static_cast<size_t>(std::lower_bound(nodes.begin(), nodes.end(), id) - nodes.begin());
  };
  std::vector<double> degree(nodes.size(), 0.0);
  for (const Triple& e : graph.central_edges) {
    degree[index_of(e.head)] += 1.0;
    degree[index_of(e.tail)] += 1.0;
  }

  std::vector<double> current(nodes.size(), 0.0);
  for (int id : graph.zero_hop)
    current[index_of(id)] = 1.0 / static_cast<double>(graph.zero_hop.size());
  scores.push_back(current);

  for (int layer = 1; layer <= layers; ++layer) {
    std::vector<double> next(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i)
      next[i] = (1.0 - lambda) * current[i] + (degree[i] == 0.0 ? lambda * current[i] : 0.0);
    for (const Triple& e : graph.central_edges) {
      size_t h = index_of(e.head), t = index_of(e.tail);
      next[h] += lambda * current[t] / degree[t];
      next[t] += lambda * current[h] / degree[h];
    }
    current = std::move(next);
    scores.push_back(current);
  }
  return scores;
}

struct CentralEncoding {
  struct EdgeRef {
    int neighbor;
    int relation;
  };

  std::vector<int> node_ids;    // sorted V0 u V1
  std::vector<Tensor> node_vecs;  // final-layer g per node
  std::vector<Tensor> utter_states;  // p^0..p^L
  std::vector<std::vector<double>> pagerank;  // [layer][node]
  std::vector<std::vector<EdgeRef>> incident;  // per node, fixed order
  std::vector<std::vector<Vec>> edge_attention;  // [layer-1][node], aligned with incident

  bool empty() const { return node_ids.empty(); }
  int index_of(int concept_id) const {
    auto it = std::lower_bound(node_ids.begin(), node_ids.end(), concept_id);
    if (it == node_ids.end() || *it != concept_id) return -1;
    return static_cast<int>(it - node_ids.begin());
  }
};

// Layer-0 node vectors are the (optionally projected) concept embeddings and
// p^0 is the last utterance state. Each layer then recomputes the utterance
// state from the zero-hop nodes and aggregates relation-specific neighbor
// messages weighted by softmax(r.p) times the PageRank of the sender,
// re-normalized per neighborhood. Neighborhoods whose PageRank mass is still
// zero fall back to the plain relation softmax.
inline CentralEncoding encode_central(Tape* tape, const ModelParams& params,
                                      const ConceptGraph& graph,
                                      const UtteranceEncoding& utterance,
                                      double pagerank_lambda = 0.5) {
  if (graph.zero_hop.empty())
    throw DataError("encode_central: utterance state undefined without zero-hop concepts");
  int layers = params.dims.gnn_layers;

  CentralEncoding enc;
  enc.node_ids = graph.central_ids();
  enc.pagerank = pagerank_layers(graph, layers, pagerank_lambda);

  size_t n = enc.node_ids.size();
  enc.incident.assign(n, {});
  for (const Triple& e : graph.central_edges) {
    int hi = enc.index_of(e.head), ti = enc.index_of(e.tail);
    enc.incident[static_cast<size_t>(hi)].push_back({e.tail, e.relation});
    enc.incident[static_cast<size_t>(ti)].push_back({e.head, e.relation});
  }

  std::vector<Tensor> g(n);
  for (size_t i = 0; i < n; ++i) {
    Tensor emb = row(tape, params.concept_emb, enc.node_ids[i]);
    g[i] = maybe_project(tape, params.concept_in_proj, emb);
  }
  Tensor p = utterance.last();
  enc.utter_states.push_back(p);

  std::vector<size_t> zero_idx;
  for (int id : graph.zero_hop) zero_idx.push_back(static_cast<size_t>(enc.index_of(id)));

  for (int layer = 1; layer <= layers; ++layer) {
    const std::vector<double>& pr_prev = enc.pagerank[static_cast<size_t>(layer - 1)];
    Tensor p_rel = maybe_project(tape, params.state_rel_proj, p);

    std::vector<Tensor> g_next(n);
    enc.edge_attention.emplace_back(n);
    for (size_t i = 0; i < n; ++i) {
      const auto& edges = enc.incident[i];
      Tensor message;
      if (edges.empty()) {
        message = Tensor::zeros({params.dims.hidden});
      } else {
        std::vector<Tensor> scores;
        std::vector<Tensor> payloads;
        Vec pr_weights;
        scores.reserve(edges.size());
        for (const auto& e : edges) {
          Tensor rel = row(tape, params.relation_emb, e.relation);
          scores.push_back(dot(tape, rel, p_rel));
          size_t j = static_cast<size_t>(enc.index_of(e.neighbor));
          payloads.push_back(apply(tape, params.message_ffn,
                                   concat(tape, rel, g[j])));
          pr_weights.push_back(pr_prev[j]);
        }
        Tensor alpha = softmax(tape, concat(tape, scores));
        double mass = 0.0;
        for (size_t k = 0; k < pr_weights.size(); ++k) mass += alpha[static_cast<int>(k)] * pr_weights[k];
        if (mass > 0.0) alpha = normalize(tape, scale_elems(tape, alpha, pr_weights));
        enc.edge_attention.back()[i] = alpha.values();
        message = weighted_sum(tape, alpha, payloads);
      }
      const Tensor parts[] = {g[i], p, message};
      g_next[i] = apply(tape, params.node_update, concat(tape, std::span<const Tensor>(parts, 3)));
    }

    Tensor zero_sum = g[zero_idx.front()];
    for (size_t k = 1; k < zero_idx.size(); ++k) zero_sum = add(tape, zero_sum, g[zero_idx[k]]);
    p = apply(tape, params.utter_update, zero_sum);
    enc.utter_states.push_back(p);
    g = std::move(g_next);
  }

  enc.node_vecs = std::move(g);
  return enc;
}

struct OuterEncoding {
  std::vector<int> head_ids;      // V1 heads that kept at least one flow
  std::vector<Tensor> flow_vecs;  // f per head, dimension 2*concept_dim
  std::vector<Vec> thetas;        // attention snapshot per head
  std::vector<std::vector<OuterFlow>> flows;  // aligned with head_ids

  bool empty() const { return head_ids.empty(); }
};

// theta_k = softmax_k((w_r.r)^T tanh(w_h.e_p + w_t.e_k)) over the flows of
// each head, f = sum_k theta_k [e_p o e_k], all on raw concept embeddings.
inline OuterEncoding encode_outer(Tape* tape, const ModelParams& params,
                                  const ConceptGraph& graph) {
  OuterEncoding enc;
  for (const auto& [head, flows] : graph.outer_flows) {
    if (flows.empty()) continue;
    Tensor head_emb = row(tape, params.concept_emb, head);
    Tensor head_part = matvec(tape, params.attn_head, head_emb);
    std::vector<Tensor> scores;
    std::vector<Tensor> pairs;
    scores.reserve(flows.size());
    for (const OuterFlow& f : flows) {
      Tensor tail_emb = row(tape, params.concept_emb, f.tail);
      Tensor rel_emb = row(tape, params.relation_emb, f.relation);
      Tensor blend = tanh(tape, add(tape, head_part, matvec(tape, params.attn_tail, tail_emb)));
      scores.push_back(dot(tape, matvec(tape, params.attn_rel, rel_emb), blend));
      pairs.push_back(concat(tape, head_emb, tail_emb));
    }
    Tensor theta = softmax(tape, concat(tape, scores));
    enc.head_ids.push_back(head);
    enc.flow_vecs.push_back(weighted_sum(tape, theta, pairs));
    enc.thetas.push_back(theta.values());
    enc.flows.push_back(flows);
  }
  return enc;
}

}  // namespace conceptflow
