// SPDX-License-Identifier: Apache-2.0
#include "clqa/mining.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace clqa {
namespace {

constexpr Eigen::Index kBlockRows = 512;

RowMatrixF normalized_rows(const RowMatrixF& m) {
  RowMatrixF out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const float norm = m.row(r).norm();
    if (norm > 0.0f) {
      out.row(r) = m.row(r) / norm;
    } else {
      out.row(r).setZero();
    }
  }
  return out;
}

void push_neighbor(std::vector<Neighbor>& list, std::size_t k, Neighbor n) {
  // Keep the k best under (cosine desc, index asc).
  const auto worse = [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine < b.cosine;
    return a.index > b.index;
  };
  if (list.size() < k) {
    list.push_back(n);
    return;
  }
  auto worst = list.begin();
  for (auto it = std::next(list.begin()); it != list.end(); ++it) {
    if (worse(*it, *worst)) worst = it;
  }
  if (worse(*worst, n)) *worst = n;
}

void sort_neighbors(std::vector<Neighbor>& list) {
  std::sort(list.begin(), list.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.index < b.index;
  });
}

char ascii_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::string ascii_lowered(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

}  // namespace

KnnResult cosine_knn(const SentencePool& a, const SentencePool& b,
                     std::size_t k) {
  if (k == 0) {
    throw std::invalid_argument("cosine_knn: k must be at least 1");
  }
  if (a.size() == 0 || b.size() == 0) {
    throw std::invalid_argument("cosine_knn: empty sentence pool");
  }
  if (a.embeddings.cols() != b.embeddings.cols()) {
    throw std::invalid_argument("cosine_knn: embedding dimension mismatch");
  }
  if (a.embeddings.rows() != static_cast<Eigen::Index>(a.size()) ||
      b.embeddings.rows() != static_cast<Eigen::Index>(b.size())) {
    throw std::invalid_argument("cosine_knn: embedding row count mismatch");
  }
  const RowMatrixF an = normalized_rows(a.embeddings);
  const RowMatrixF bn = normalized_rows(b.embeddings);
  KnnResult result;
  result.forward.resize(a.size());
  result.backward.resize(b.size());
  for (Eigen::Index r0 = 0; r0 < an.rows(); r0 += kBlockRows) {
    const Eigen::Index rows = std::min(kBlockRows, an.rows() - r0);
    const RowMatrixF block = an.middleRows(r0, rows) * bn.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const std::size_t i = static_cast<std::size_t>(r0 + r);
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        const double cos = static_cast<double>(block(r, j));
        push_neighbor(result.forward[i], k, {static_cast<std::size_t>(j), cos});
        push_neighbor(result.backward[static_cast<std::size_t>(j)], k, {i, cos});
      }
    }
  }
  for (auto& list : result.forward) sort_neighbors(list);
  for (auto& list : result.backward) sort_neighbors(list);
  return result;
}

double margin_score(double cos_ij, std::span<const double> neighbors_i,
                    std::span<const double> neighbors_j, std::size_t k) {
  if (k == 0) {
    throw std::invalid_argument("margin_score: k must be at least 1");
  }
  if (neighbors_i.empty() || neighbors_j.empty()) {
    throw std::invalid_argument("margin_score: empty neighbor list");
  }
  const double denom_i =
      std::accumulate(neighbors_i.begin(), neighbors_i.end(), 0.0) /
      (2.0 * static_cast<double>(k));
  const double denom_j =
      std::accumulate(neighbors_j.begin(), neighbors_j.end(), 0.0) /
      (2.0 * static_cast<double>(k));
  const double denom = denom_i + denom_j;
  if (denom == 0.0) {
    throw std::invalid_argument("margin_score: zero denominator");
  }
  return cos_ij / denom;
}

ClozeResult make_cloze(std::string_view sentence, std::size_t span_begin,
                       std::size_t span_end,
                       const std::optional<std::string>& l_sentence,
                       bool l_is_latin, std::string_view placeholder) {
  if (span_begin >= span_end || span_end > sentence.size()) {
    throw std::invalid_argument("make_cloze: answer span out of range");
  }
  ClozeResult result;
  result.answer = std::string(sentence.substr(span_begin, span_end - span_begin));
  result.en_cloze = std::string(sentence.substr(0, span_begin));
  result.en_cloze += placeholder;
  result.en_cloze += sentence.substr(span_end);
  if (!l_sentence.has_value()) {
    return result;
  }
  result.l_cloze = *l_sentence;
  if (!l_is_latin) {
    return result;
  }
  std::size_t pos = l_sentence->find(result.answer);
  std::size_t len = result.answer.size();
  if (pos == std::string::npos) {
    const std::string hay = ascii_lowered(*l_sentence);
    const std::string needle = ascii_lowered(result.answer);
    pos = hay.find(needle);
    len = needle.size();
  }
  if (pos != std::string::npos) {
    std::string masked = l_sentence->substr(0, pos);
    masked += placeholder;
    masked += l_sentence->substr(pos + len);
    result.l_cloze = std::move(masked);
  }
  return result;
}

std::vector<ParallelPair> mine_parallel_pairs(const SentencePool& en_pool,
                                              const SentencePool& l_pool,
                                              const MiningConfig& config) {
  for (const SentenceRecord& s : en_pool.sentences) {
    for (const EntitySpan& span : s.spans) {
      if (span.begin >= span.end || span.end > s.text.size()) {
        throw std::invalid_argument("mine_parallel_pairs: invalid entity span");
      }
    }
  }
  if (en_pool.size() == 0 || l_pool.size() == 0) {
    return {};
  }
  const KnnResult knn = cosine_knn(en_pool, l_pool, config.knn_k);
  const double half_k = 2.0 * static_cast<double>(config.knn_k);
  std::vector<double> sum_en(en_pool.size(), 0.0);
  for (std::size_t i = 0; i < en_pool.size(); ++i) {
    for (const Neighbor& n : knn.forward[i]) sum_en[i] += n.cosine / half_k;
  }
  std::vector<double> sum_l(l_pool.size(), 0.0);
  for (std::size_t j = 0; j < l_pool.size(); ++j) {
    for (const Neighbor& n : knn.backward[j]) sum_l[j] += n.cosine / half_k;
  }

  struct Claim {
    std::size_t en = 0;
    std::size_t l = 0;
    double margin = 0.0;
  };
  std::vector<Claim> claims;
  const RowMatrixF an = normalized_rows(en_pool.embeddings);
  const RowMatrixF bn = normalized_rows(l_pool.embeddings);
  for (Eigen::Index r0 = 0; r0 < an.rows(); r0 += kBlockRows) {
    const Eigen::Index rows = std::min(kBlockRows, an.rows() - r0);
    const RowMatrixF block = an.middleRows(r0, rows) * bn.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const std::size_t i = static_cast<std::size_t>(r0 + r);
      bool found = false;
      Claim best;
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        const double denom = sum_en[i] + sum_l[static_cast<std::size_t>(j)];
        if (denom <= 0.0) continue;
        const double margin = static_cast<double>(block(r, j)) / denom;
        if (!found || margin > best.margin) {
          found = true;
          best = {i, static_cast<std::size_t>(j), margin};
        }
      }
      if (found && best.margin >= config.threshold) {
        claims.push_back(best);
      }
    }
  }

  // One-to-one: every L sentence goes to its highest-margin claimant.
  std::vector<Claim> winners(l_pool.size());
  std::vector<bool> taken(l_pool.size(), false);
  for (const Claim& c : claims) {
    if (!taken[c.l] || c.margin > winners[c.l].margin ||
        (c.margin == winners[c.l].margin && c.en < winners[c.l].en)) {
      winners[c.l] = c;
      taken[c.l] = true;
    }
  }
  std::vector<Claim> kept;
  for (std::size_t j = 0; j < l_pool.size(); ++j) {
    if (taken[j]) kept.push_back(winners[j]);
  }
  std::sort(kept.begin(), kept.end(),
            [](const Claim& a, const Claim& b) { return a.en < b.en; });

  std::vector<ParallelPair> pairs;
  for (const Claim& c : kept) {
    const SentenceRecord& en = en_pool.sentences[c.en];
    const std::string& l_text = l_pool.sentences[c.l].text;
    for (const EntitySpan& span : en.spans) {
      ClozeResult cloze = make_cloze(en.text, span.begin, span.end, l_text,
                                     config.l_is_latin, config.placeholder);
      ParallelPair pair;
      pair.en_text = en.text;
      pair.l_text = l_text;
      pair.l_lang = l_pool.lang;
      pair.margin = c.margin;
      pair.answer = std::move(cloze.answer);
      pair.en_cloze = std::move(cloze.en_cloze);
      pair.l_cloze = std::move(*cloze.l_cloze);
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

std::map<std::string, double> balanced_sample_probs(const LanguageStats& stats,
                                                    double alpha) {
  if (stats.counts.empty()) {
    throw std::invalid_argument("balanced_sample_probs: no languages");
  }
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw std::invalid_argument("balanced_sample_probs: alpha must be in (0, 1]");
  }
  double total = 0.0;
  for (const auto& [lang, n] : stats.counts) {
    if (n == 0) {
      throw std::invalid_argument("balanced_sample_probs: zero count for " + lang);
    }
    total += static_cast<double>(n);
  }
  std::map<std::string, double> probs;
  double norm = 0.0;
  for (const auto& [lang, n] : stats.counts) {
    const double f = static_cast<double>(n) / total;
    const double w = std::pow(f, alpha);
    probs[lang] = w;
    norm += w;
  }
  for (auto& [lang, p] : probs) p /= norm;
  return probs;
}

namespace {

// Largest-remainder apportionment of `total` over weights.
std::map<std::string, std::size_t> apportion(
    const std::map<std::string, double>& weights, std::size_t total) {
  std::map<std::string, std::size_t> out;
  double wsum = 0.0;
  for (const auto& [lang, w] : weights) wsum += w;
  struct Rem {
    std::string lang;
    double frac;
  };
  std::vector<Rem> rems;
  std::size_t assigned = 0;
  for (const auto& [lang, w] : weights) {
    const double target = static_cast<double>(total) * w / wsum;
    const std::size_t base = static_cast<std::size_t>(std::floor(target));
    out[lang] = base;
    assigned += base;
    rems.push_back({lang, target - static_cast<double>(base)});
  }
  std::sort(rems.begin(), rems.end(), [](const Rem& a, const Rem& b) {
    if (a.frac != b.frac) return a.frac > b.frac;
    return a.lang < b.lang;
  });
  for (std::size_t i = 0; assigned < total; ++i) {
    out[rems[i % rems.size()].lang] += 1;
    ++assigned;
  }
  return out;
}

}  // namespace

std::map<std::string, std::size_t> balanced_sample_counts(
    const LanguageStats& stats, double alpha, std::size_t total) {
  if (total == 0) {
    throw std::invalid_argument("balanced_sample_counts: total must be at least 1");
  }
  std::size_t available = 0;
  for (const auto& [lang, n] : stats.counts) available += n;
  if (total > available) {
    throw std::invalid_argument(
        "balanced_sample_counts: total exceeds available examples");
  }
  const std::map<std::string, double> probs = balanced_sample_probs(stats, alpha);
  std::map<std::string, std::size_t> quotas = apportion(probs, total);

  // Cap quotas at per-language availability, re-spreading the overflow
  // across languages that still have room until none is left.
  std::size_t deficit = 0;
  for (auto& [lang, q] : quotas) {
    const std::size_t n = stats.counts.at(lang);
    if (q > n) {
      deficit += q - n;
      q = n;
    }
  }
  while (deficit > 0) {
    std::map<std::string, double> spare_probs;
    for (const auto& [lang, p] : probs) {
      if (quotas.at(lang) < stats.counts.at(lang)) spare_probs[lang] = p;
    }
    const auto shares = apportion(spare_probs, deficit);
    deficit = 0;
    for (const auto& [lang, extra] : shares) {
      const std::size_t room = stats.counts.at(lang) - quotas.at(lang);
      const std::size_t add = std::min(extra, room);
      quotas[lang] += add;
      deficit += extra - add;
    }
  }
  return quotas;
}

std::vector<ParallelPair> select_balanced(const std::vector<ParallelPair>& pairs,
                                          double alpha, std::size_t total) {
  LanguageStats stats;
  std::map<std::string, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    by_lang[pairs[i].l_lang].push_back(i);
    stats.counts[pairs[i].l_lang] += 1;
  }
  const auto quotas = balanced_sample_counts(stats, alpha, total);
  std::vector<ParallelPair> out;
  for (auto& [lang, indices] : by_lang) {
    std::stable_sort(indices.begin(), indices.end(),
                     [&](std::size_t a, std::size_t b) {
                       return pairs[a].margin > pairs[b].margin;
                     });
    const std::size_t quota = quotas.at(lang);
    for (std::size_t i = 0; i < quota && i < indices.size(); ++i) {
      out.push_back(pairs[indices[i]]);
    }
  }
  return out;
}

}  // namespace clqa
