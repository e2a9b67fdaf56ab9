// SPDX-License-Identifier: Apache-2.0
#include "clqa/index.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

#include "clqa/jsonl.hpp"
#include "json.hpp"

namespace clqa {
namespace {

// Slack added to score upper bounds so float rounding in the scoring
// kernel can never evict a passage the exact scan would keep.
double bound_slack(double cap) { return 2e-5 * (1.0 + std::abs(cap)); }

Eigen::Index query_head_slot(Eigen::Index query_heads,
                             Eigen::Index head_index) {
  if (query_heads > head_index) return head_index;
  if (query_heads == 1) return 0;  // pre-sliced single-head query
  throw std::invalid_argument(
      "query embedding does not carry the index's head");
}

}  // namespace

std::string to_string(IndexMode mode) {
  return mode == IndexMode::kDense ? "dense" : "multi_vector";
}

IndexMode index_mode_from_string(const std::string& name) {
  if (name == "dense") return IndexMode::kDense;
  if (name == "multi_vector" || name == "mv") return IndexMode::kMultiVector;
  throw std::invalid_argument("unknown index mode: " + name);
}

RetrievalIndex RetrievalIndex::build(const Corpus& corpus,
                                     const TensorBundle& embeddings,
                                     IndexMode mode, Eigen::Index head_index) {
  RetrievalIndex index;
  index.mode_ = mode;
  index.head_index_ = mode == IndexMode::kMultiVector ? head_index : 0;
  const std::size_t n = corpus.size();
  index.ids_.reserve(n);
  for (const Passage& p : corpus.passages()) index.ids_.push_back(p.id);

  if (mode == IndexMode::kDense) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!embeddings.contains(index.ids_[i])) {
        throw std::invalid_argument("missing embedding for passage id: " +
                                    index.ids_[i]);
      }
      const Eigen::VectorXf v = dense_from_array(embeddings.at(index.ids_[i]));
      if (i == 0) {
        index.dim_ = v.size();
        index.dense_.resize(static_cast<Eigen::Index>(n), index.dim_);
      } else if (v.size() != index.dim_) {
        throw std::invalid_argument("embedding shape mismatch for passage id: " +
                                    index.ids_[i]);
      }
      index.dense_.row(static_cast<Eigen::Index>(i)) = v.transpose();
    }
  } else {
    if (head_index < 0) {
      throw std::invalid_argument("head index out of range");
    }
    index.offsets_.assign(n + 1, 0);
    std::vector<MultiVectorEmbeddingF> packed;
    packed.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!embeddings.contains(index.ids_[i])) {
        throw std::invalid_argument("missing embedding for passage id: " +
                                    index.ids_[i]);
      }
      MultiVectorEmbeddingF e = embedding_from_array(embeddings.at(index.ids_[i]));
      if (head_index >= e.head_count()) {
        throw std::invalid_argument("head index out of range for passage id: " +
                                    index.ids_[i]);
      }
      if (i == 0) {
        index.dim_ = e.dim();
      } else if (e.dim() != index.dim_) {
        throw std::invalid_argument("embedding shape mismatch for passage id: " +
                                    index.ids_[i]);
      }
      index.offsets_[i + 1] =
          index.offsets_[i] + static_cast<std::size_t>(e.token_count());
      packed.push_back(std::move(e));
    }
    index.tokens_.resize(static_cast<Eigen::Index>(index.offsets_[n]),
                         index.dim_ == 0 ? 0 : index.dim_);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& head = packed[i].heads[static_cast<std::size_t>(head_index)];
      index.tokens_.middleRows(static_cast<Eigen::Index>(index.offsets_[i]),
                               head.rows()) = head;
    }
  }
  index.finish_build();
  return index;
}

void RetrievalIndex::finish_build() {
  const std::size_t n = ids_.size();
  bound_.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (mode_ == IndexMode::kDense) {
      bound_[static_cast<Eigen::Index>(i)] =
          dense_.row(static_cast<Eigen::Index>(i)).cast<double>().norm();
    } else {
      const Eigen::Index rows =
          static_cast<Eigen::Index>(offsets_[i + 1] - offsets_[i]);
      double best = 0.0;
      const auto block =
          tokens_.middleRows(static_cast<Eigen::Index>(offsets_[i]), rows);
      for (Eigen::Index r = 0; r < rows; ++r) {
        best = std::max(best, block.row(r).cast<double>().norm());
      }
      bound_[static_cast<Eigen::Index>(i)] = best;
    }
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  std::sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (bound_[a] != bound_[b]) return bound_[a] > bound_[b];
    return ids_[a] < ids_[b];
  });
}

template <typename ScoreFn>
ScoreList RetrievalIndex::scan_topk(std::size_t k, double query_bound_factor,
                                    const ScoreFn& score) const {
  if (k == 0) {
    throw std::invalid_argument("search_topk: k must be at least 1");
  }
  struct Entry {
    double score;
    std::uint32_t idx;
  };
  const auto better = [this](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    return ids_[a.idx] < ids_[b.idx];
  };
  // `better` as the ordering makes the priority queue surface the worst
  // retained entry at top().
  std::priority_queue<Entry, std::vector<Entry>, decltype(better)> heap(better);
  for (std::uint32_t idx : order_) {
    if (heap.size() >= k) {
      const double cap = query_bound_factor * bound_[idx];
      if (cap + bound_slack(cap) < heap.top().score) break;
    }
    const Entry e{score(idx), idx};
    if (heap.size() < k) {
      heap.push(e);
    } else if (better(e, heap.top())) {
      heap.pop();
      heap.push(e);
    }
  }
  std::vector<Entry> ranked;
  ranked.reserve(heap.size());
  while (!heap.empty()) {
    ranked.push_back(heap.top());
    heap.pop();
  }
  std::reverse(ranked.begin(), ranked.end());
  ScoreList out;
  out.ids.reserve(ranked.size());
  out.scores.resize(static_cast<Eigen::Index>(ranked.size()));
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    out.ids.push_back(ids_[ranked[i].idx]);
    out.scores[static_cast<Eigen::Index>(i)] = ranked[i].score;
  }
  return out;
}

ScoreList RetrievalIndex::search_topk(const Eigen::VectorXf& query,
                                      std::size_t k) const {
  if (mode_ != IndexMode::kDense) {
    throw std::invalid_argument("search_topk: dense query on a multi-vector index");
  }
  if (size() > 0 && query.size() != dim_) {
    throw std::invalid_argument("search_topk: query dimension mismatch");
  }
  const double qnorm = query.cast<double>().norm();
  return scan_topk(k, qnorm, [&](std::uint32_t idx) {
    return dense_score(query, dense_.row(static_cast<Eigen::Index>(idx)));
  });
}

ScoreList RetrievalIndex::search_topk(const MultiVectorEmbeddingF& query,
                                      std::size_t k) const {
  if (mode_ != IndexMode::kMultiVector) {
    throw std::invalid_argument(
        "search_topk: multi-vector query on a dense index");
  }
  query.validate();
  if (size() > 0 && query.dim() != dim_) {
    throw std::invalid_argument("search_topk: query dimension mismatch");
  }
  const Eigen::Index slot = query_head_slot(query.head_count(), head_index_);
  const RowMatrixF q = unmasked_rows(
      query.heads[static_cast<std::size_t>(slot)], query.pad_mask);
  double sum_norms = 0.0;
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    sum_norms += q.row(r).cast<double>().norm();
  }
  return scan_topk(k, sum_norms, [&](std::uint32_t idx) {
    const Eigen::Index rows =
        static_cast<Eigen::Index>(offsets_[idx + 1] - offsets_[idx]);
    return sum_of_max_kernel(
        q, tokens_.middleRows(static_cast<Eigen::Index>(offsets_[idx]), rows));
  });
}

void RetrievalIndex::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json passages = nlohmann::json::array();
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    nlohmann::json entry{{"id", ids_[i]}};
    if (mode_ == IndexMode::kMultiVector) {
      entry["tokens"] = offsets_[i + 1] - offsets_[i];
    }
    passages.push_back(std::move(entry));
  }
  const nlohmann::json manifest{{"mode", to_string(mode_)},
                                {"head_index", head_index_},
                                {"dim", dim_},
                                {"passages", passages}};
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  const RowMatrixF& data = mode_ == IndexMode::kDense ? dense_ : tokens_;
  std::string bytes(reinterpret_cast<const char*>(data.data()),
                    static_cast<std::size_t>(data.size()) * 4);
  write_file_atomic(dir / "embeddings.f32", bytes);
}

RetrievalIndex RetrievalIndex::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw std::runtime_error("cannot open index manifest in " + dir.string());
  }
  nlohmann::json manifest;
  in >> manifest;
  RetrievalIndex index;
  index.mode_ = index_mode_from_string(manifest.at("mode").get<std::string>());
  index.head_index_ = manifest.at("head_index").get<Eigen::Index>();
  index.dim_ = manifest.at("dim").get<Eigen::Index>();
  std::vector<std::size_t> tokens;
  for (const nlohmann::json& entry : manifest.at("passages")) {
    index.ids_.push_back(entry.at("id").get<std::string>());
    if (index.mode_ == IndexMode::kMultiVector) {
      tokens.push_back(entry.at("tokens").get<std::size_t>());
    }
  }
  std::ifstream data(dir / "embeddings.f32", std::ios::binary);
  if (!data) {
    throw std::runtime_error("cannot open index data in " + dir.string());
  }
  data.seekg(0, std::ios::end);
  const std::streamoff bytes = data.tellg();
  data.seekg(0, std::ios::beg);
  const std::size_t count = static_cast<std::size_t>(bytes) / 4;
  std::size_t expected_rows = 0;
  if (index.mode_ == IndexMode::kDense) {
    expected_rows = index.ids_.size();
  } else {
    index.offsets_.assign(index.ids_.size() + 1, 0);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      index.offsets_[i + 1] = index.offsets_[i] + tokens[i];
    }
    expected_rows = index.offsets_.back();
  }
  if (count != expected_rows * static_cast<std::size_t>(index.dim_)) {
    throw std::runtime_error("index data size mismatch in " + dir.string());
  }
  RowMatrixF& target =
      index.mode_ == IndexMode::kDense ? index.dense_ : index.tokens_;
  target.resize(static_cast<Eigen::Index>(expected_rows), index.dim_);
  data.read(reinterpret_cast<char*>(target.data()),
            static_cast<std::streamsize>(count * 4));
  if (!data) {
    throw std::runtime_error("index data read failed in " + dir.string());
  }
  index.finish_build();
  return index;
}

ScoreList brute_force_topk(const Corpus& corpus, const TensorBundle& embeddings,
                           IndexMode mode, Eigen::Index head_index,
                           const Eigen::VectorXf& query, std::size_t k) {
  if (mode != IndexMode::kDense) {
    throw std::invalid_argument("brute_force_topk: dense query requires dense mode");
  }
  if (k == 0) {
    throw std::invalid_argument("brute_force_topk: k must be at least 1");
  }
  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(corpus.size());
  for (const Passage& p : corpus.passages()) {
    const Eigen::VectorXf v = dense_from_array(embeddings.at(p.id));
    scored.emplace_back(dense_score(query, v), p.id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > k) scored.resize(k);
  ScoreList out;
  out.scores.resize(static_cast<Eigen::Index>(scored.size()));
  for (std::size_t i = 0; i < scored.size(); ++i) {
    out.ids.push_back(scored[i].second);
    out.scores[static_cast<Eigen::Index>(i)] = scored[i].first;
  }
  return out;
}

ScoreList brute_force_topk(const Corpus& corpus, const TensorBundle& embeddings,
                           IndexMode mode, Eigen::Index head_index,
                           const MultiVectorEmbeddingF& query, std::size_t k) {
  if (mode != IndexMode::kMultiVector) {
    throw std::invalid_argument(
        "brute_force_topk: multi-vector query requires multi-vector mode");
  }
  if (k == 0) {
    throw std::invalid_argument("brute_force_topk: k must be at least 1");
  }
  query.validate();
  const Eigen::Index slot = query_head_slot(query.head_count(), head_index);
  MultiVectorEmbeddingF q;
  q.heads.push_back(query.heads[static_cast<std::size_t>(slot)]);
  q.pad_mask = query.pad_mask;
  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(corpus.size());
  for (const Passage& p : corpus.passages()) {
    MultiVectorEmbeddingF e = embedding_from_array(embeddings.at(p.id));
    if (head_index >= e.head_count()) {
      throw std::invalid_argument("head index out of range for passage id: " +
                                  p.id);
    }
    MultiVectorEmbeddingF d;
    d.heads.push_back(std::move(e.heads[static_cast<std::size_t>(head_index)]));
    d.pad_mask = BoolArray::Constant(d.heads.front().rows(), true);
    scored.emplace_back(multi_vector_score(q, d, 0), p.id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > k) scored.resize(k);
  ScoreList out;
  out.scores.resize(static_cast<Eigen::Index>(scored.size()));
  for (std::size_t i = 0; i < scored.size(); ++i) {
    out.ids.push_back(scored[i].second);
    out.scores[static_cast<Eigen::Index>(i)] = scored[i].first;
  }
  return out;
}

TokenSlice token_budget_slice(const ScoreList& ranked, const Corpus& corpus,
                              std::size_t budget_tokens) {
  if (budget_tokens == 0) {
    throw std::invalid_argument("token_budget_slice: budget must be at least 1");
  }
  TokenSlice slice;
  std::size_t remaining = budget_tokens;
  for (const std::string& id : ranked.ids) {
    if (remaining == 0) break;
    const Passage& p = corpus.at(id);
    const std::size_t take = std::min(p.token_count, remaining);
    slice.entries.push_back({id, take});
    slice.total_tokens += take;
    remaining -= take;
  }
  return slice;
}

}  // namespace clqa
