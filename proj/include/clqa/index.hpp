// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "clqa/scoring.hpp"
#include "clqa/tensor_bundle.hpp"
#include "clqa/types.hpp"

namespace clqa {

enum class IndexMode { kDense, kMultiVector };

std::string to_string(IndexMode mode);
IndexMode index_mode_from_string(const std::string& name);

// Rank-ordered (passage id, included token count) pairs under a budget.
struct TokenSliceEntry {
  std::string id;
  std::size_t tokens = 0;
};
struct TokenSlice {
  std::vector<TokenSliceEntry> entries;
  std::size_t total_tokens = 0;
};

// Searchable structure over packed passage embeddings. Searches are exact:
// passages are scanned in decreasing score-upper-bound order (Cauchy-Schwarz
// on token norms) and the scan stops once no remaining bound can enter the
// current top-k. Scores are exactly those of the scoring module.
class RetrievalIndex {
 public:
  static RetrievalIndex build(const Corpus& corpus,
                              const TensorBundle& embeddings, IndexMode mode,
                              Eigen::Index head_index = 6);

  IndexMode mode() const { return mode_; }
  Eigen::Index head_index() const { return head_index_; }
  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  // k highest-scoring passages, score descending, ties by ascending id.
  ScoreList search_topk(const Eigen::VectorXf& query, std::size_t k) const;
  ScoreList search_topk(const MultiVectorEmbeddingF& query,
                        std::size_t k) const;

  void save(const std::filesystem::path& dir) const;
  static RetrievalIndex load(const std::filesystem::path& dir);

 private:
  void finish_build();
  const float* passage_data(std::size_t i, Eigen::Index& rows) const;

  template <typename ScoreFn>
  ScoreList scan_topk(std::size_t k, double query_bound_factor,
                      const ScoreFn& score) const;

  IndexMode mode_ = IndexMode::kDense;
  Eigen::Index head_index_ = 0;
  Eigen::Index dim_ = 0;
  std::vector<std::string> ids_;
  RowMatrixF dense_;                   // dense mode: one row per passage
  RowMatrixF tokens_;                  // multi-vector: packed selected head
  std::vector<std::size_t> offsets_;   // multi-vector: n + 1 row offsets
  std::vector<std::uint32_t> order_;   // scan order, bound descending
  Eigen::VectorXd bound_;              // per-passage upper-bound factor
};

// Exhaustive scoring oracle with the same ordering contract as
// RetrievalIndex::search_topk; kept independent of the scan path.
ScoreList brute_force_topk(const Corpus& corpus, const TensorBundle& embeddings,
                           IndexMode mode, Eigen::Index head_index,
                           const Eigen::VectorXf& query, std::size_t k);
ScoreList brute_force_topk(const Corpus& corpus, const TensorBundle& embeddings,
                           IndexMode mode, Eigen::Index head_index,
                           const MultiVectorEmbeddingF& query, std::size_t k);

// Greedy prefix fill: passages in rank order each contribute
// min(token_count, remaining budget) tokens until the budget is spent.
TokenSlice token_budget_slice(const ScoreList& ranked, const Corpus& corpus,
                              std::size_t budget_tokens);

}  // namespace clqa
