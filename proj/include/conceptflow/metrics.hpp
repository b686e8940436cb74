#pragma once

// Corpus evaluation: BLEU-n, NIST-n, ROUGE-1/2/L, distinct-n, n-gram entropy
// and concept precision/recall/F1. Inputs are already tokenized; nothing here
// re-tokenizes.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "conceptflow/errors.hpp"

namespace conceptflow::metrics {

using Sentence = std::vector<std::string>;
using Corpus = std::vector<Sentence>;
using Ngram = std::vector<std::string>;

inline std::map<Ngram, long> ngram_counts(const Sentence& s, int n) {
  std::map<Ngram, long> counts;
  if (static_cast<int>(s.size()) >= n)
    for (size_t i = 0; i + static_cast<size_t>(n) <= s.size(); ++i)
      ++counts[Ngram(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(i) + n)];
  return counts;
}

inline void check_aligned(const Corpus& hyps, const Corpus& refs) {
  if (hyps.empty()) throw DataError("metrics: empty corpus");
  if (hyps.size() != refs.size())
    throw DataError("metrics: hypothesis/reference counts differ (" +
                    std::to_string(hyps.size()) + " vs " + std::to_string(refs.size()) + ")");
}

// Corpus BLEU-n: geometric mean of clipped modified precisions with the
// brevity penalty, no smoothing. Any empty order zeroes the score.
inline double bleu(const Corpus& hyps, const Corpus& refs, int n) {
  check_aligned(hyps, refs);
  if (n < 1 || n > 4) throw DataError("bleu: order must be in 1..4");

  long hyp_len = 0, ref_len = 0;
  for (const Sentence& h : hyps) hyp_len += static_cast<long>(h.size());
  for (const Sentence& r : refs) ref_len += static_cast<long>(r.size());
  if (hyp_len == 0) return 0.0;

  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    long matched = 0, total = 0;
    for (size_t i = 0; i < hyps.size(); ++i) {
      auto hyp_counts = ngram_counts(hyps[i], k);
      auto ref_counts = ngram_counts(refs[i], k);
      for (const auto& [gram, count] : hyp_counts) {
        total += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matched += std::min(count, it->second);
      }
    }
    if (matched == 0 || total == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
  }

  double bp = hyp_len >= ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::exp(log_sum / static_cast<double>(n));
}

// Information-weighted n-gram co-occurrence. Weights come from reference
// corpus statistics: info(w1..wk) = log2(count(w1..w_{k-1}) / count(w1..wk)),
// with the total reference word count as the order-0 "prefix" count. The
// brevity factor halves the score at a 2/3 length ratio.
inline double nist(const Corpus& hyps, const Corpus& refs, int n) {
  check_aligned(hyps, refs);
  if (n < 1) throw DataError("nist: order must be >= 1");

  std::vector<std::map<Ngram, long>> ref_counts(static_cast<size_t>(n) + 1);
  long ref_words = 0;
  for (const Sentence& r : refs) {
    ref_words += static_cast<long>(r.size());
    for (int k = 1; k <= n; ++k)
      for (const auto& [gram, count] : ngram_counts(r, k))
        ref_counts[static_cast<size_t>(k)][gram] += count;
  }

  auto info = [&](const Ngram& gram) {
    size_t k = gram.size();
    auto it = ref_counts[k].find(gram);
    if (it == ref_counts[k].end()) return 0.0;
    double denom = static_cast<double>(it->second);
    double numer;
    if (k == 1) {
      numer = static_cast<double>(ref_words);
    } else {
      Ngram prefix(gram.begin(), gram.end() - 1);
      numer = static_cast<double>(ref_counts[k - 1].at(prefix));
    }
    return std::log2(numer / denom);
  };

  double score = 0.0;
  for (int k = 1; k <= n; ++k) {
    double weighted = 0.0;
    long total = 0;
    for (size_t i = 0; i < hyps.size(); ++i) {
      auto hyp_counts = ngram_counts(hyps[i], k);
      auto seg_ref = ngram_counts(refs[i], k);
      for (const auto& [gram, count] : hyp_counts) {
        total += count;
        auto it = seg_ref.find(gram);
        if (it != seg_ref.end())
          weighted += static_cast<double>(std::min(count, it->second)) * info(gram);
      }
    }
    if (total > 0) score += weighted / static_cast<double>(total);
  }

  long hyp_len = 0;
  for (const Sentence& h : hyps) hyp_len += static_cast<long>(h.size());
  if (hyp_len == 0 || ref_words == 0) return 0.0;
  double ratio = std::min(1.0, static_cast<double>(hyp_len) / static_cast<double>(ref_words));
  // beta solves exp(beta * ln^2(2/3)) = 0.5
  double beta = std::log(0.5) / std::pow(std::log(2.0 / 3.0), 2);
  double brevity = std::exp(beta * std::pow(std::log(ratio), 2));
  return score * brevity;
}

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline Prf make_prf(double precision, double recall) {
  Prf out;
  out.precision = precision;
  out.recall = recall;
  out.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  return out;
}

enum class RougeVariant { one, two, lcs };

// Per-pair ROUGE. Variants 1 and 2 count clipped n-gram overlap; L uses the
// longest common subsequence.
inline Prf rouge(const Sentence& hyp, const Sentence& ref, RougeVariant variant) {
  if (ref.empty()) throw DataError("rouge: empty reference");
  if (hyp.empty()) return {};

  if (variant == RougeVariant::lcs) {
    size_t hn = hyp.size(), rn = ref.size();
    std::vector<std::vector<int>> lcs(hn + 1, std::vector<int>(rn + 1, 0));
    for (size_t i = 1; i <= hn; ++i)
      for (size_t j = 1; j <= rn; ++j)
        lcs[i][j] = hyp[i - 1] == ref[j - 1] ? lcs[i - 1][j - 1] + 1
                                             : std::max(lcs[i - 1][j], lcs[i][j - 1]);
    double match = static_cast<double>(lcs[hn][rn]);
    return make_prf(match / static_cast<double>(hn), match / static_cast<double>(rn));
  }

  int n = variant == RougeVariant::one ? 1 : 2;
  auto hyp_counts = ngram_counts(hyp, n);
  auto ref_counts = ngram_counts(ref, n);
  long matched = 0, hyp_total = 0, ref_total = 0;
  for (const auto& [gram, count] : hyp_counts) {
    hyp_total += count;
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) matched += std::min(count, it->second);
  }
  for (const auto& [gram, count] : ref_counts) ref_total += count;
  if (hyp_total == 0 || ref_total == 0) return {};
  return make_prf(static_cast<double>(matched) / static_cast<double>(hyp_total),
                  static_cast<double>(matched) / static_cast<double>(ref_total));
}

// Distinct n-grams over total n-grams across the corpus.
inline double dist_n(const Corpus& hyps, int n) {
  if (n < 1) throw DataError("dist_n: order must be >= 1");
  std::set<Ngram> distinct;
  long total = 0;
  for (const Sentence& h : hyps)
    for (const auto& [gram, count] : ngram_counts(h, n)) {
      distinct.insert(gram);
      total += count;
    }
  if (total == 0) return 0.0;
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

// Shannon entropy (natural log) of the empirical n-gram distribution.
inline double ent_n(const Corpus& hyps, int n) {
  if (n < 1) throw DataError("ent_n: order must be >= 1");
  std::map<Ngram, long> counts;
  long total = 0;
  for (const Sentence& h : hyps)
    for (const auto& [gram, count] : ngram_counts(h, n)) {
      counts[gram] += count;
      total += count;
    }
  if (total == 0) return 0.0;
  double entropy = 0.0;
  for (const auto& [gram, count] : counts) {
    double p = static_cast<double>(count) / static_cast<double>(total);
    entropy -= p * std::log(p);
  }
  return entropy;
}

// Set-overlap precision/recall/F1 over concept ids. Conventions for the
// degenerate sets: both empty scores perfect, an empty golden set has recall
// 1, an empty generated set has precision 0.
inline Prf concept_prf(const std::set<int>& generated, const std::set<int>& golden) {
  if (golden.empty() && generated.empty()) return {1.0, 1.0, 1.0};
  if (golden.empty()) return make_prf(0.0, 1.0);
  if (generated.empty()) return {0.0, 0.0, 0.0};
  long hit = 0;
  for (int id : generated) hit += golden.count(id);
  return make_prf(static_cast<double>(hit) / static_cast<double>(generated.size()),
                  static_cast<double>(hit) / static_cast<double>(golden.size()));
}

// Ordered scalar report; rendering lives with the CLI.
struct EvalReport {
  std::vector<std::pair<std::string, double>> values;
  void put(const std::string& name, double v) { values.emplace_back(name, v); }
  double get(const std::string& name) const {
    for (const auto& [k, v] : values)
      if (k == name) return v;
    throw DataError("report has no metric named " + name);
  }
  bool has(const std::string& name) const {
    for (const auto& [k, v] : values)
      if (k == name) return true;
    return false;
  }
};

}  // namespace conceptflow::metrics
