#pragma once

// Per-conversation concept graph: zero-hop seeds grown to the central graph
// (V0 u V1) and the outer flows (V1 -> V2), plus hop/coverage statistics.

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "conceptflow/knowledge.hpp"

namespace conceptflow {

struct OuterFlow {
  int relation;
  int tail;      // concept in V2
  bool inverse;  // original triple direction was tail -> head
};

struct ConceptGraph {
  std::vector<int> zero_hop;  // sorted ascending, pairwise disjoint sets
  std::vector<int> one_hop;
  std::vector<int> two_hop;
  std::vector<Triple> central_edges;  // both endpoints in V0 u V1, no self-loops
  // Keyed by V1 head, sorted; flows sorted by (relation, tail, inverse).
  std::vector<std::pair<int, std::vector<OuterFlow>>> outer_flows;

  std::vector<int> central_ids() const {
    std::vector<int> ids;
    ids.reserve(zero_hop.size() + one_hop.size());
    ids.insert(ids.end(), zero_hop.begin(), zero_hop.end());
    ids.insert(ids.end(), one_hop.begin(), one_hop.end());
    std::sort(ids.begin(), ids.end());
    return ids;
  }
};

// Hop sets are shortest-path distance classes from V0, traversing edges in
// both directions and skipping self-loops.
inline ConceptGraph build_concept_graph(const std::vector<int>& zero_hop,
                                        const KnowledgeGraph& kg) {
  for (int id : zero_hop)
    if (id < 0 || id >= kg.concept_count())
      throw DataError("build_concept_graph: unknown concept id " + std::to_string(id));

  ConceptGraph graph;
  graph.zero_hop.assign(zero_hop.begin(), zero_hop.end());
  std::sort(graph.zero_hop.begin(), graph.zero_hop.end());
  graph.zero_hop.erase(std::unique(graph.zero_hop.begin(), graph.zero_hop.end()),
                       graph.zero_hop.end());

  std::set<int> known(graph.zero_hop.begin(), graph.zero_hop.end());
  auto expand = [&](const std::vector<int>& frontier) {
    std::set<int> next;
    for (int id : frontier)
      for (const AdjacencyEntry& e : kg.adjacency[static_cast<size_t>(id)]) {
        if (e.neighbor == id) continue;  // self-loop
        if (!known.count(e.neighbor)) next.insert(e.neighbor);
      }
    return std::vector<int>(next.begin(), next.end());
  };

  graph.one_hop = expand(graph.zero_hop);
  known.insert(graph.one_hop.begin(), graph.one_hop.end());
  graph.two_hop = expand(graph.one_hop);

  std::set<int> central(graph.zero_hop.begin(), graph.zero_hop.end());
  central.insert(graph.one_hop.begin(), graph.one_hop.end());
  for (const Triple& t : kg.triples)
    if (t.head != t.tail && central.count(t.head) && central.count(t.tail))
      graph.central_edges.push_back(t);

  std::set<int> two(graph.two_hop.begin(), graph.two_hop.end());
  for (int head : graph.one_hop) {
    std::vector<OuterFlow> flows;
    for (const AdjacencyEntry& e : kg.adjacency[static_cast<size_t>(head)])
      if (e.neighbor != head && two.count(e.neighbor))
        flows.push_back({e.relation, e.neighbor, e.inverse});
    std::sort(flows.begin(), flows.end(), [](const OuterFlow& a, const OuterFlow& b) {
      return std::tie(a.relation, a.tail, a.inverse) < std::tie(b.relation, b.tail, b.inverse);
    });
    if (!flows.empty()) graph.outer_flows.emplace_back(head, std::move(flows));
  }
  return graph;
}

// Replaces V2 by `keep` and filters the outer flows accordingly. Central
// structure is untouched.
inline ConceptGraph prune_two_hop(const ConceptGraph& graph, const std::vector<int>& keep) {
  std::set<int> two(graph.two_hop.begin(), graph.two_hop.end());
  std::set<int> kept;
  for (int id : keep) {
    if (!two.count(id))
      throw DataError("prune_two_hop: id " + std::to_string(id) + " is not a two-hop concept");
    kept.insert(id);
  }
  ConceptGraph pruned = graph;
  pruned.two_hop.assign(kept.begin(), kept.end());
  pruned.outer_flows.clear();
  for (const auto& [head, flows] : graph.outer_flows) {
    std::vector<OuterFlow> filtered;
    for (const OuterFlow& f : flows)
      if (kept.count(f.tail)) filtered.push_back(f);
    if (!filtered.empty()) pruned.outer_flows.emplace_back(head, std::move(filtered));
  }
  return pruned;
}

struct HopStats {
  struct Row {
    int depth;
    double mean_amount;      // mean closure size at this depth
    double coverage_ratio;   // mean fraction of golden concepts inside the closure
    double coverage_count;   // mean number of golden concepts inside the closure
  };
  std::vector<Row> rows;
  int example_count = 0;
};

// Averages, per hop depth, the closure size and how much of the golden
// concept set it covers. Examples without golden concepts do not contribute
// to the ratio column.
inline HopStats hop_statistics(const std::vector<ConversationExample>& examples,
                               const KnowledgeGraph& kg, int max_depth = 3) {
  if (max_depth < 0) throw DataError("hop_statistics: max_depth must be >= 0");
  HopStats stats;
  stats.example_count = static_cast<int>(examples.size());
  std::vector<double> amount(static_cast<size_t>(max_depth) + 1, 0.0);
  std::vector<double> ratio(static_cast<size_t>(max_depth) + 1, 0.0);
  std::vector<double> count(static_cast<size_t>(max_depth) + 1, 0.0);
  int with_golden = 0;

  for (const ConversationExample& ex : examples) {
    std::set<int> closure(ex.zero_hop.begin(), ex.zero_hop.end());
    std::set<int> golden(ex.golden.begin(), ex.golden.end());
    if (!golden.empty()) ++with_golden;
    std::vector<int> frontier(closure.begin(), closure.end());
    for (int depth = 0; depth <= max_depth; ++depth) {
      if (depth > 0) {
        std::set<int> next;
        for (int id : frontier)
          for (const AdjacencyEntry& e : kg.adjacency[static_cast<size_t>(id)])
            if (e.neighbor != id && !closure.count(e.neighbor)) next.insert(e.neighbor);
        frontier.assign(next.begin(), next.end());
        closure.insert(next.begin(), next.end());
      }
      size_t covered = 0;
      for (int g : golden) covered += closure.count(g);
      amount[static_cast<size_t>(depth)] += static_cast<double>(closure.size());
      count[static_cast<size_t>(depth)] += static_cast<double>(covered);
      if (!golden.empty())
        ratio[static_cast<size_t>(depth)] +=
            static_cast<double>(covered) / static_cast<double>(golden.size());
    }
  }

  double n = std::max<double>(1.0, static_cast<double>(examples.size()));
  double ng = std::max<double>(1.0, static_cast<double>(with_golden));
  for (int depth = 0; depth <= max_depth; ++depth) {
    size_t d = static_cast<size_t>(depth);
    stats.rows.push_back({depth, amount[d] / n, ratio[d] / ng, count[d] / n});
  }
  return stats;
}

}  // namespace conceptflow
