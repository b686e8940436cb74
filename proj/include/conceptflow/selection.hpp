#pragma once

// Two-hop concept selection: every candidate is scored by its decoder
// attention summed over the steps of a teacher-forced pass, and the top K
// survive into the pruned graph.

#include <algorithm>
#include <vector>

#include "conceptflow/decoder.hpp"

namespace conceptflow {

struct SelectionScore {
  std::vector<int> candidate_ids;  // sorted V2
  Vec scores;                      // summed per-step softmax attention
  int steps = 0;
};

// Per step t, softmax over all candidates of s_t . e_k; scores are the
// per-candidate sums, so they total exactly the number of steps.
inline SelectionScore score_two_hop(const ModelParams& params,
                                    const std::vector<Tensor>& states,
                                    const std::vector<int>& candidate_ids) {
  if (candidate_ids.empty()) throw DataError("score_two_hop: empty candidate set");
  if (states.empty()) throw DataError("score_two_hop: no decoder states");

  std::vector<Tensor> rows;
  rows.reserve(candidate_ids.size());
  for (int id : candidate_ids) rows.push_back(row(nullptr, params.concept_emb, id));

  SelectionScore result;
  result.candidate_ids = candidate_ids;
  result.scores.assign(candidate_ids.size(), 0.0);
  result.steps = static_cast<int>(states.size());
  for (const Tensor& s : states) {
    Tensor u = maybe_project(nullptr, params.state_concept_proj, s);
    Tensor att = softmax(nullptr, dots(nullptr, u, rows));
    for (size_t i = 0; i < result.scores.size(); ++i) result.scores[i] += att[static_cast<int>(i)];
  }
  return result;
}

// The K highest-scoring candidates, ties broken toward the lower concept id.
// Returns ids in ascending order.
inline std::vector<int> select_top_k(const SelectionScore& score, int k) {
  if (k < 0) throw DataError("select_top_k: negative K");
  std::vector<size_t> order(score.candidate_ids.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (score.scores[a] != score.scores[b]) return score.scores[a] > score.scores[b];
    return score.candidate_ids[a] < score.candidate_ids[b];
  });
  size_t kept = std::min(static_cast<size_t>(k), order.size());
  std::vector<int> ids;
  ids.reserve(kept);
  for (size_t i = 0; i < kept; ++i) ids.push_back(score.candidate_ids[order[i]]);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace conceptflow
