// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clqa/embedding.hpp"

namespace clqa {

struct EntitySpan {
  std::size_t begin = 0;  // byte offsets, [begin, end)
  std::size_t end = 0;
  std::string label;
};

struct SentenceRecord {
  std::string text;
  std::vector<EntitySpan> spans;
};

// Sentences of one page in one language plus their sentence embeddings
// (one row per sentence).
struct SentencePool {
  std::string lang;
  std::vector<SentenceRecord> sentences;
  RowMatrixF embeddings;

  std::size_t size() const { return sentences.size(); }
};

struct Neighbor {
  std::size_t index = 0;
  double cosine = 0.0;
};

struct KnnResult {
  std::vector<std::vector<Neighbor>> forward;   // a -> b
  std::vector<std::vector<Neighbor>> backward;  // b -> a
};

// k highest-cosine neighbours in the other pool for every sentence, both
// directions; the cosine of a zero vector is 0. Lists are sorted by
// cosine descending, ties by ascending index.
KnnResult cosine_knn(const SentencePool& a, const SentencePool& b,
                     std::size_t k);

// cos_ij / (sum(neighbors_i)/2k + sum(neighbors_j)/2k).
double margin_score(double cos_ij, std::span<const double> neighbors_i,
                    std::span<const double> neighbors_j, std::size_t k);

struct ClozeResult {
  std::string en_cloze;
  std::optional<std::string> l_cloze;
  std::string answer;
};

// Masks the answer span in the English sentence; masks the first exact or
// case-insensitive occurrence in the L sentence only for Latin-script
// languages, leaving it unchanged otherwise.
ClozeResult make_cloze(std::string_view sentence, std::size_t span_begin,
                       std::size_t span_end,
                       const std::optional<std::string>& l_sentence,
                       bool l_is_latin, std::string_view placeholder);

struct ParallelPair {
  std::string en_text;
  std::string l_text;
  std::string l_lang;
  double margin = 0.0;
  std::string answer;
  std::string en_cloze;
  std::string l_cloze;
};

struct MiningConfig {
  std::size_t knn_k = 4;
  double threshold = 1.5;
  std::string placeholder = "<mask>";
  bool l_is_latin = false;
};

// For each English sentence, the best margin-scoring partner kept when its
// margin reaches the threshold, resolved one-to-one (an L sentence goes to
// its highest-margin claimant), then expanded to one pair per entity span.
std::vector<ParallelPair> mine_parallel_pairs(const SentencePool& en_pool,
                                              const SentencePool& l_pool,
                                              const MiningConfig& config);

struct LanguageStats {
  std::map<std::string, std::size_t> counts;  // per-language example counts
};

// p_i = f_i^alpha / sum_j f_j^alpha with f_i = n_i / sum_j n_j.
std::map<std::string, double> balanced_sample_probs(const LanguageStats& stats,
                                                    double alpha);

// Largest-remainder quotas summing to `total`, capped at n_i with overflow
// redistributed proportionally across languages that still have capacity.
std::map<std::string, std::size_t> balanced_sample_counts(
    const LanguageStats& stats, double alpha, std::size_t total);

// Applies per-language quotas, keeping each language's top pairs by margin.
std::vector<ParallelPair> select_balanced(const std::vector<ParallelPair>& pairs,
                                          double alpha, std::size_t total);

}  // namespace clqa
