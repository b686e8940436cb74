#pragma once

// Margin-ranking embedding pretraining over the knowledge graph triples.
// Produces the concept/relation vectors used to initialize the model.

#include <cmath>
#include <vector>

#include "conceptflow/knowledge.hpp"
#include "conceptflow/nn.hpp"

namespace conceptflow {

struct TranseResult {
  std::vector<Vec> concept_vecs;
  std::vector<Vec> relation_vecs;
  double initial_mean_distance = 0.0;
  double final_mean_distance = 0.0;
};

namespace detail {

inline double triple_distance(const Vec& h, const Vec& r, const Vec& t) {
  double acc = 0.0;
  for (size_t i = 0; i < h.size(); ++i) {
    double d = h[i] + r[i] - t[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline void l2_normalize(Vec& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& x : v) x /= norm;
}

inline double mean_positive_distance(const KnowledgeGraph& kg,
                                     const std::vector<Vec>& concepts,
                                     const std::vector<Vec>& relations) {
  double total = 0.0;
  for (const Triple& t : kg.triples)
    total += triple_distance(concepts[static_cast<size_t>(t.head)],
                             relations[static_cast<size_t>(t.relation)],
                             concepts[static_cast<size_t>(t.tail)]);
  return total / static_cast<double>(kg.triples.size());
}

}  // namespace detail

// Optimizes max(0, margin + ||h+r-t|| - ||h'+r-t'||) with uniform negative
// sampling (head or tail corrupted with probability 0.5). Concept rows are
// L2-normalized to unit norm after each epoch.
inline TranseResult pretrain_transe(const KnowledgeGraph& kg, int dim, int epochs,
                                    double margin, double lr, uint64_t seed) {
  if (dim <= 0) throw DataError("transe: dimension must be positive");
  if (margin <= 0.0) throw DataError("transe: margin must be positive");
  if (kg.triples.empty()) throw DataError("transe: no triples");

  RandomSource rng(seed);
  double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  TranseResult result;
  result.concept_vecs.resize(static_cast<size_t>(kg.concept_count()));
  result.relation_vecs.resize(static_cast<size_t>(kg.relation_count()));
  for (Vec& v : result.concept_vecs) {
    v.resize(static_cast<size_t>(dim));
    for (double& x : v) x = rng.uniform(-bound, bound);
    detail::l2_normalize(v);
  }
  for (Vec& v : result.relation_vecs) {
    v.resize(static_cast<size_t>(dim));
    for (double& x : v) x = rng.uniform(-bound, bound);
    detail::l2_normalize(v);
  }

  auto& concepts = result.concept_vecs;
  auto& relations = result.relation_vecs;
  result.initial_mean_distance = detail::mean_positive_distance(kg, concepts, relations);

  std::vector<size_t> order(kg.triples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t idx : order) {
      const Triple& pos = kg.triples[idx];
      Triple neg = pos;
      if (rng.next_double() < 0.5)
        neg.head = rng.next_int(kg.concept_count());
      else
        neg.tail = rng.next_int(kg.concept_count());

      Vec& ph = concepts[static_cast<size_t>(pos.head)];
      Vec& pt = concepts[static_cast<size_t>(pos.tail)];
      Vec& nh = concepts[static_cast<size_t>(neg.head)];
      Vec& nt = concepts[static_cast<size_t>(neg.tail)];
      Vec& rel = relations[static_cast<size_t>(pos.relation)];

      double dp = detail::triple_distance(ph, rel, pt);
      double dn = detail::triple_distance(nh, rel, nt);
      if (margin + dp - dn <= 0.0) continue;

      // d ||h+r-t|| / dh = (h+r-t)/||.||, zero-safe at the origin
      for (int i = 0; i < dim; ++i) {
        size_t ui = static_cast<size_t>(i);
        double gp = dp > 0.0 ? (ph[ui] + rel[ui] - pt[ui]) / dp : 0.0;
        double gn = dn > 0.0 ? (nh[ui] + rel[ui] - nt[ui]) / dn : 0.0;
        ph[ui] -= lr * gp;
        pt[ui] += lr * gp;
        rel[ui] -= lr * (gp - gn);
        nh[ui] += lr * gn;
        nt[ui] -= lr * gn;
      }
    }
    for (Vec& v : concepts) detail::l2_normalize(v);
  }

  result.final_mean_distance = detail::mean_positive_distance(kg, concepts, relations);
  return result;
}

}  // namespace conceptflow
